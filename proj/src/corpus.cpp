#include "triage/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "triage/errors.hpp"
#include "triage/rng.hpp"

namespace triage {

using nlohmann::json;

namespace {

bool parse_fixed(std::string_view s, std::size_t pos, std::size_t len, int& out) {
  const char* first = s.data() + pos;
  const char* last = first + len;
  for (const char* c = first; c != last; ++c)
    if (*c < '0' || *c > '9') return false;
  return std::from_chars(first, last, out).ec == std::errc{};
}

}  // namespace

std::optional<Timestamp> parse_timestamp(std::string_view s) {
  // YYYY-MM-DDThh:mm:ssZ
  if (s.size() != 20 || s[4] != '-' || s[7] != '-' || s[10] != 'T' || s[13] != ':' ||
      s[16] != ':' || s[19] != 'Z')
    return std::nullopt;
  int y, mo, d, h, mi, se;
  if (!parse_fixed(s, 0, 4, y) || !parse_fixed(s, 5, 2, mo) || !parse_fixed(s, 8, 2, d) ||
      !parse_fixed(s, 11, 2, h) || !parse_fixed(s, 14, 2, mi) || !parse_fixed(s, 17, 2, se))
    return std::nullopt;
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || se > 59) return std::nullopt;
  return sys_days{ymd} + hours{h} + minutes{mi} + seconds{se};
}

std::string format_timestamp(Timestamp t) {
  using namespace std::chrono;
  const auto day_start = floor<days>(t);
  const year_month_day ymd{day_start};
  const hh_mm_ss hms{t - day_start};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

bool chronological_less(const Post& a, const Post& b) {
  if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
  return a.post_id < b.post_id;
}

std::optional<std::size_t> ThreadView::position_of(std::string_view post_id) const {
  for (std::size_t i = 0; i < posts.size(); ++i)
    if (posts[i]->post_id == post_id) return i;
  return std::nullopt;
}

Corpus::Corpus(std::vector<Post> posts) : posts_(std::move(posts)) {
  by_id_.reserve(posts_.size());
  for (std::size_t i = 0; i < posts_.size(); ++i) {
    const Post& p = posts_[i];
    if (p.kudos < 0 || p.views < 0)
      throw InvalidArgument("post " + p.post_id + ": kudos and views must be nonnegative");
    if (!by_id_.emplace(p.post_id, i).second)
      throw InvalidArgument("duplicate post_id: " + p.post_id);
    threads_[p.thread_id].push_back(i);
  }
  for (auto& [id, members] : threads_)
    std::sort(members.begin(), members.end(), [this](std::size_t a, std::size_t b) {
      return chronological_less(posts_[a], posts_[b]);
    });
}

const Post* Corpus::find(std::string_view post_id) const {
  auto it = by_id_.find(std::string(post_id));
  return it == by_id_.end() ? nullptr : &posts_[it->second];
}

const Post& Corpus::at(std::string_view post_id) const {
  if (const Post* p = find(post_id)) return *p;
  throw NotFound("unknown post_id: " + std::string(post_id));
}

std::vector<std::string> Corpus::thread_ids() const {
  std::vector<std::string> ids;
  ids.reserve(threads_.size());
  for (const auto& [id, _] : threads_) ids.push_back(id);
  return ids;
}

ThreadView Corpus::thread(std::string_view thread_id) const {
  auto it = threads_.find(std::string(thread_id));
  if (it == threads_.end()) throw NotFound("unknown thread_id: \"" + std::string(thread_id) + "\"");
  ThreadView view{it->first, {}};
  view.posts.reserve(it->second.size());
  for (std::size_t i : it->second) view.posts.push_back(&posts_[i]);
  return view;
}

std::map<std::string, SeverityLabel> Corpus::labels() const {
  std::map<std::string, SeverityLabel> out;
  for (const Post& p : posts_)
    if (p.label) out.emplace(p.post_id, *p.label);
  return out;
}

std::map<std::string, std::vector<const Post*>> Corpus::posts_by_author() const {
  std::map<std::string, std::vector<const Post*>> out;
  for (const Post& p : posts_) out[p.author_id].push_back(&p);
  for (auto& [_, v] : out)
    std::sort(v.begin(), v.end(), [](const Post* a, const Post* b) { return chronological_less(*a, *b); });
  return out;
}

ThreadView thread_of(const Corpus& corpus, std::string_view thread_id) { return corpus.thread(thread_id); }

namespace {

std::string require_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) throw std::runtime_error(std::string("missing string field '") + key + "'");
  return it->get<std::string>();
}

std::int64_t require_count(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_number_integer())
    throw std::runtime_error(std::string("missing integer field '") + key + "'");
  const auto v = it->get<std::int64_t>();
  if (v < 0) throw std::runtime_error(std::string("negative '") + key + "'");
  return v;
}

Post post_from_json(const json& j) {
  if (!j.is_object()) throw std::runtime_error("record is not a JSON object");
  Post p;
  p.post_id = require_string(j, "post_id");
  if (p.post_id.empty()) throw std::runtime_error("empty post_id");
  p.thread_id = require_string(j, "thread_id");
  p.author_id = require_string(j, "author_id");
  const std::string role = require_string(j, "author_role");
  if (role == "member")
    p.author_role = AuthorRole::Member;
  else if (role == "moderator")
    p.author_role = AuthorRole::Moderator;
  else
    throw std::runtime_error("unknown author_role '" + role + "'");
  const std::string ts = require_string(j, "timestamp");
  auto parsed = parse_timestamp(ts);
  if (!parsed) throw std::runtime_error("bad timestamp '" + ts + "'");
  p.timestamp = *parsed;
  p.subject = require_string(j, "subject");
  p.body = require_string(j, "body");
  p.kudos = require_count(j, "kudos");
  p.views = require_count(j, "views");
  if (auto it = j.find("label"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw std::runtime_error("label is not a string");
    auto label = parse_label(it->get<std::string>());
    if (!label) throw std::runtime_error("unknown label '" + it->get<std::string>() + "'");
    p.label = label;
  }
  return p;
}

}  // namespace

std::string post_to_json_line(const Post& p) {
  // nlohmann::json objects keep keys sorted, so written corpora are byte-stable.
  json j = json::object();
  j["post_id"] = p.post_id;
  j["thread_id"] = p.thread_id;
  j["author_id"] = p.author_id;
  j["author_role"] = p.author_role == AuthorRole::Moderator ? "moderator" : "member";
  j["timestamp"] = format_timestamp(p.timestamp);
  j["subject"] = p.subject;
  j["body"] = p.body;
  j["kudos"] = p.kudos;
  j["views"] = p.views;
  if (p.label) j["label"] = std::string(to_string(*p.label));
  return j.dump();
}

CorpusLoad read_corpus(std::istream& in) {
  std::vector<Post> posts;
  CorpusLoad result;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      posts.push_back(post_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      ++result.skipped;
      result.diagnostics.push_back("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  result.corpus = Corpus(std::move(posts));
  return result;
}

CorpusLoad load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read corpus file: " + path);
  return read_corpus(in);
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
  for (const Post& p : corpus.posts()) out << post_to_json_line(p) << '\n';
}

void write_corpus(const std::string& path, const Corpus& corpus) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write corpus file: " + path);
  write_corpus(out, corpus);
}

std::vector<std::string> FoldAssignment::members(int fold) const {
  std::vector<std::string> out;
  for (const auto& [id, f] : fold_of)
    if (f == fold) out.push_back(id);
  return out;
}

namespace {

std::array<std::vector<std::string>, kNumClasses> shuffled_by_class(
    const std::map<std::string, SeverityLabel>& labels, std::uint64_t seed) {
  std::array<std::vector<std::string>, kNumClasses> by_class;
  for (const auto& [id, label] : labels) by_class[static_cast<std::size_t>(index_of(label))].push_back(id);
  Rng rng(seed);
  for (auto& ids : by_class) rng.shuffle(ids.begin(), ids.end());
  return by_class;
}

}  // namespace

FoldAssignment stratified_folds(const std::map<std::string, SeverityLabel>& labels, int k,
                                std::uint64_t seed) {
  if (k < 2) throw InvalidArgument("stratified_folds: k must be >= 2");
  if (static_cast<std::size_t>(k) > labels.size())
    throw InvalidArgument("stratified_folds: k exceeds the number of labeled posts");
  FoldAssignment out;
  out.k = k;
  // The round-robin start carries over between classes so that fold sizes stay balanced too.
  std::size_t cursor = 0;
  for (const auto& ids : shuffled_by_class(labels, seed)) {
    for (const auto& id : ids) {
      out.fold_of[id] = static_cast<int>(cursor % static_cast<std::size_t>(k));
      ++cursor;
    }
  }
  return out;
}

HoldoutSplit stratified_holdout(const std::map<std::string, SeverityLabel>& labels,
                                double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw InvalidArgument("stratified_holdout: test_fraction must be in (0, 1)");
  HoldoutSplit out;
  for (const auto& ids : shuffled_by_class(labels, seed)) {
    const auto n_test = static_cast<std::size_t>(std::lround(static_cast<double>(ids.size()) * test_fraction));
    for (std::size_t i = 0; i < ids.size(); ++i) (i < n_test ? out.test : out.train).push_back(ids[i]);
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

}  // namespace triage
