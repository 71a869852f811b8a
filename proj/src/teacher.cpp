#include "dataforge/teacher.hpp"

#include <atomic>
#include <fstream>
#include <httplib.h>
#include <nlohmann/json.hpp>
#include <sstream>
#include <thread>

#include "dataforge/hash.hpp"

namespace dataforge {

using json = nlohmann::json;

TeacherConfig TeacherConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read teacher config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError("teacher config " + path.string() + ": " + e.what());
  }
  TeacherConfig c;
  try {
    c.base_url = j.value("base_url", "");
    c.model = j.value("model", "teacher");
    if (j.contains("prompt_template_path")) {
      std::filesystem::path p = j.at("prompt_template_path").get<std::string>();
      c.prompt_template_path = p.is_relative() ? path.parent_path() / p : p;
    }
    c.timeout_s = j.value("timeout_s", 60.0);
    c.max_retries = j.value("max_retries", 3);
    const auto mode = j.value("mode", "stub");
    if (mode != "stub" && mode != "live") throw ValidationError("teacher config: mode must be 'live' or 'stub'");
    c.stub = mode == "stub";
  } catch (const json::exception& e) {
    throw ValidationError("teacher config " + path.string() + ": " + e.what());
  }
  if (!c.stub && c.base_url.empty()) throw ValidationError("teacher config: live mode needs base_url");
  if (c.max_retries < 1) throw ValidationError("teacher config: max_retries must be >= 1");
  return c;
}

TeacherResponse StubTeacher::generate(const TeacherRequest& request) {
  if (request.passage.empty()) throw TeacherError("teacher: empty passage", false);
  const std::uint64_t h = fnv1a64(request.passage);
  // First few words of the passage give the pair a readable anchor.
  std::string lead;
  std::size_t words = 0;
  for (char c : request.passage) {
    if (c == ' ' || c == '\n') {
      if (!lead.empty() && lead.back() != ' ' && ++words == 4) break;
      if (!lead.empty() && lead.back() != ' ') lead.push_back(' ');
      continue;
    }
    if (static_cast<unsigned char>(c) < 0x80 && c != '"' && c != '\\') lead.push_back(c);
  }
  while (!lead.empty() && lead.back() == ' ') lead.pop_back();
  TeacherResponse r;
  r.question = "[" + to_hex(h) + "] What does the passage beginning \"" + lead + "\" describe?";
  r.answer = "It describes item " + to_hex(mix64(h)) + ".";
  return r;
}

TeacherResponse parse_teacher_reply(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    throw TeacherError(std::string("teacher: unparsable reply: ") + e.what(), true);
  }
  if (!j.is_object() || !j.contains("question") || !j.contains("answer") || !j["question"].is_string() ||
      !j["answer"].is_string()) {
    throw TeacherError("teacher: reply lacks string fields \"question\" and \"answer\"", true);
  }
  TeacherResponse r{j["question"].get<std::string>(), j["answer"].get<std::string>()};
  if (r.question.empty() || r.answer.empty()) throw TeacherError("teacher: empty question or answer", false);
  return r;
}

HttpTeacher::HttpTeacher(TeacherConfig config) : config_(std::move(config)) {
  const auto& url = config_.base_url;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ValidationError("teacher base_url needs a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/generate" : url.substr(path_start);
  if (!config_.prompt_template_path.empty()) {
    std::ifstream in(config_.prompt_template_path);
    if (!in) throw IoError("cannot read prompt template " + config_.prompt_template_path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    prompt_template_ = ss.str();
    template_id_ = config_.prompt_template_path.stem().string();
  } else {
    prompt_template_ = "{passage}";
    template_id_ = "passthrough";
  }
}

std::string HttpTeacher::render_prompt(const std::string& passage) const {
  std::string out = prompt_template_;
  const std::string slot = "{passage}";
  for (auto pos = out.find(slot); pos != std::string::npos; pos = out.find(slot, pos + passage.size())) {
    out.replace(pos, slot.size(), passage);
  }
  return out;
}

TeacherResponse HttpTeacher::attempt(const TeacherRequest& request) const {
  httplib::Client cli(scheme_host_port_);
  const auto secs = static_cast<time_t>(config_.timeout_s);
  const auto usecs = static_cast<time_t>((config_.timeout_s - static_cast<double>(secs)) * 1e6);
  cli.set_connection_timeout(secs, usecs);
  cli.set_read_timeout(secs, usecs);
  cli.set_write_timeout(secs, usecs);
  const json body = {{"passage", request.passage},
                     {"model", config_.model},
                     {"prompt", render_prompt(request.passage)}};
  auto res = cli.Post(path_, body.dump(-1, ' ', false, json::error_handler_t::replace), "application/json");
  if (!res) throw TeacherError("teacher: request failed: " + httplib::to_string(res.error()), true);
  if (res->status < 200 || res->status >= 300) {
    throw TeacherError("teacher: HTTP status " + std::to_string(res->status), true);
  }
  return parse_teacher_reply(res->body);
}

TeacherResponse HttpTeacher::generate(const TeacherRequest& request) {
  if (request.passage.empty()) throw TeacherError("teacher: empty passage", false);
  std::string last;
  for (int i = 0; i < config_.max_retries; ++i) {
    try {
      return attempt(request);
    } catch (const TeacherError& e) {
      if (!e.retryable()) throw;
      last = e.what();
    }
  }
  throw TeacherError(last + " (after " + std::to_string(config_.max_retries) + " attempts)", true);
}

std::unique_ptr<Teacher> make_teacher(const TeacherConfig& config) {
  if (config.stub) return std::make_unique<StubTeacher>();
  return std::make_unique<HttpTeacher>(config);
}

std::vector<TeacherOutcome> generate_all(Teacher& teacher, std::span<const TeacherRequest> requests,
                                         std::size_t max_in_flight) {
  std::vector<TeacherOutcome> out(requests.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < requests.size(); i = next++) {
      try {
        out[i].response = teacher.generate(requests[i]);
      } catch (const Error& e) {
        out[i].error = e.what();
      }
    }
  };
  const std::size_t n = std::min(std::max<std::size_t>(max_in_flight, 1), requests.size());
  if (n <= 1) {
    worker();
    return out;
  }
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
  }
  return out;
}

}  // namespace dataforge
