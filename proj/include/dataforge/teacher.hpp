#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dataforge/error.hpp"

namespace dataforge {

struct TeacherRequest {
  std::string passage;
  std::string prompt_template_id;
  std::string model;
};

struct TeacherResponse {
  std::string question;
  std::string answer;
};

class TeacherError : public Error {
 public:
  TeacherError(const std::string& message, bool retryable) : Error(message), retryable_(retryable) {}
  bool retryable() const { return retryable_; }

 private:
  bool retryable_;
};

// Client config file:
//   {"base_url": "http://host:port/generate", "model": "...",
//    "prompt_template_path": "...", "timeout_s": 60, "max_retries": 3,
//    "mode": "live" | "stub"}
struct TeacherConfig {
  std::string base_url;
  std::string model = "teacher";
  std::filesystem::path prompt_template_path;
  double timeout_s = 60.0;
  int max_retries = 3;
  bool stub = true;

  static TeacherConfig load(const std::filesystem::path& path);
};

class Teacher {
 public:
  virtual ~Teacher() = default;
  /// Must be safe to call from several threads at once.
  virtual TeacherResponse generate(const TeacherRequest& request) = 0;
  virtual std::string prompt_template_id() const = 0;
  virtual std::string model() const = 0;
};

/// Offline stand-in: the pair is a pure function of the passage bytes.
class StubTeacher final : public Teacher {
 public:
  TeacherResponse generate(const TeacherRequest& request) override;
  std::string prompt_template_id() const override { return "stub-v1"; }
  std::string model() const override { return "stub"; }
};

/// JSON-over-HTTP client. Wire format: POST {"passage", "model", "prompt"}
/// -> {"question", "answer"}. Transport failures, non-2xx replies and
/// unparsable bodies are retried up to max_retries times.
class HttpTeacher final : public Teacher {
 public:
  explicit HttpTeacher(TeacherConfig config);
  TeacherResponse generate(const TeacherRequest& request) override;
  std::string prompt_template_id() const override { return template_id_; }
  std::string model() const override { return config_.model; }

  /// The prompt sent for a passage ({passage} substituted into the template).
  std::string render_prompt(const std::string& passage) const;

 private:
  TeacherResponse attempt(const TeacherRequest& request) const;

  TeacherConfig config_;
  std::string scheme_host_port_;
  std::string path_;
  std::string prompt_template_;
  std::string template_id_;
};

std::unique_ptr<Teacher> make_teacher(const TeacherConfig& config);

/// Parses a service reply; throws TeacherError (retryable for malformed
/// bodies, non-retryable for empty fields).
TeacherResponse parse_teacher_reply(const std::string& body);

/// Runs requests with at most `max_in_flight` concurrent calls. Results are
/// returned in request order; failed entries hold the error message.
struct TeacherOutcome {
  std::optional<TeacherResponse> response;
  std::string error;
};
std::vector<TeacherOutcome> generate_all(Teacher& teacher, std::span<const TeacherRequest> requests,
                                         std::size_t max_in_flight);

}  // namespace dataforge
