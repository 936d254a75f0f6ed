#pragma once

#include <cdl/learner.hpp>
#include <cdl/types.hpp>

#include <iosfwd>
#include <stdexcept>
#include <string>

namespace cdl {

// Binary model format ("CDLM"): magic, version u32, two dictionaries
// (m:u32, K:u32, column-major f64), the code (n:u32, per column nnz:u32 then
// (index:u32, value:f64) pairs), and a count-prefixed metrics list of
// (cycle:u32, wall_time:f64, avg_nnz:f64, avg_err:f64, limit:u32). All
// integers and doubles little-endian; round trips are bit exact.
//
// Datasets use the sibling "CDLD" layout: magic, version u32, dim u32,
// count u32, column-major f64 signals, has_means u32, then count f64 means
// when present.

enum class ModelIoErrorKind {
  bad_header,          // wrong magic or unsupported version
  dimension_overflow,  // header sizes exceed sane limits
  truncated,           // file ends inside the payload
  bad_payload,         // indices out of range or non-finite values
};

class ModelIoError : public std::runtime_error {
 public:
  ModelIoError(ModelIoErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  ModelIoErrorKind kind() const { return kind_; }

 private:
  ModelIoErrorKind kind_;
};

void save_model(const CoupledModel& model, std::ostream& out);
void save_model(const CoupledModel& model, const std::string& path);
CoupledModel load_model(std::istream& in);
CoupledModel load_model(const std::string& path);

void save_dataset(const Dataset& data, std::ostream& out);
void save_dataset(const Dataset& data, const std::string& path);
Dataset load_dataset(std::istream& in);
Dataset load_dataset(const std::string& path);

// Sniffs the 4-byte magic so CLI inputs can be either format.
std::string read_magic(const std::string& path);

}  // namespace cdl
