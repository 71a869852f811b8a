#pragma once

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "dataforge/mathgen/ast.hpp"
#include "dataforge/rng.hpp"

namespace dataforge::mathgen {

struct QAInstance {
  std::string template_name;
  Substitution substitution;
  std::string question;
  Rational answer;
  std::size_t attempts = 0;  // attempts spent on this instance, including the accepted one

  nlohmann::json to_json() const;
};

struct Exhaustion {
  std::string template_name;
  std::size_t attempts = 0;
  std::string last_failure;  // failed constraint source or evaluation error
};

/// Uniform draw from every param domain.
Substitution sample_substitution(const MathTemplate& t, Rng& rng);

/// Replaces each {param} slot with the display form of its value.
std::string render_question(const MathTemplate& t, const Substitution& subst);

/// Why `subst` is unacceptable, or empty when all constraints hold and the
/// program evaluates.
std::string rejection_reason(const MathTemplate& t, const Substitution& subst);

/// Rejection sampling. Attempt a draws from the stream keyed by
/// (seed, template name, instance, a).
std::variant<QAInstance, Exhaustion> instantiate(const MathTemplate& t, std::uint64_t seed, std::size_t max_attempts,
                                                 std::size_t instance = 0);

/// Verifies the template reproduces original_answer under original_values.
/// Returns an empty string on success, else a diagnostic.
std::string faithfulness_diagnostic(const MathTemplate& t);

struct TemplateStats {
  std::string name;
  std::size_t emitted = 0;
  std::size_t exhausted = 0;
  std::size_t attempts = 0;
  bool rejected = false;
  std::string reason;

  double acceptance_rate() const { return attempts ? static_cast<double>(emitted) / static_cast<double>(attempts) : 0.0; }
};

struct ExpansionResult {
  std::vector<QAInstance> instances;
  std::vector<TemplateStats> stats;

  nlohmann::json stats_json() const;
};

/// Up to `per_template` instances per template; templates failing the
/// faithfulness gate emit nothing.
ExpansionResult expand_dataset(std::span<const MathTemplate> templates, std::size_t per_template, std::uint64_t seed,
                               std::size_t max_attempts = 1000);

/// Writes one JSON object per instance.
void write_jsonl(const std::filesystem::path& path, std::span<const QAInstance> instances);

/// Loads every *.tmpl file in a directory (sorted by name); the file stem names the template.
std::vector<MathTemplate> load_template_dir(const std::filesystem::path& dir);
MathTemplate load_template_file(const std::filesystem::path& path);

}  // namespace dataforge::mathgen
