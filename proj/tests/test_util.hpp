#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "triage/corpus.hpp"

namespace triage::testing {

inline Timestamp at(const std::string& iso) { return *parse_timestamp(iso); }

inline Post make_post(std::string id, std::string thread, std::string author, const std::string& ts,
                      std::string body = "", std::optional<SeverityLabel> label = std::nullopt,
                      AuthorRole role = AuthorRole::Member) {
  Post p;
  p.post_id = std::move(id);
  p.thread_id = std::move(thread);
  p.author_id = std::move(author);
  p.author_role = role;
  p.timestamp = at(ts);
  p.subject = "subject";
  p.body = std::move(body);
  p.label = label;
  return p;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("triage_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace triage::testing
