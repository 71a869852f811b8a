#pragma once

// Reference evaluator for template programs. Reads the template text itself
// (its own tokenizer and parser) and computes with GMP rationals, so it shares
// nothing with the library's mathgen code.

#include <gmpxx.h>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dftest {

struct OracleResult {
  bool constraints_hold = true;
  std::optional<mpq_class> answer;  // empty on division by zero or a bad floor-div/mod
};

class OracleProgram {
 public:
  explicit OracleProgram(const std::string& template_text);

  OracleResult run(const std::map<std::string, mpq_class>& params) const;

  std::size_t constraint_count() const { return constraints_.size(); }

 private:
  std::vector<std::pair<std::string, std::string>> lets_;  // name, expression text
  std::vector<std::string> constraints_;
  std::string result_;
};

/// "3", "-7/4", "1.25" as an exact GMP rational.
mpq_class oracle_rational(const std::string& text);

}  // namespace dftest
