#include "triage/densevec.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "triage/errors.hpp"

namespace triage {

void VectorStore::insert(const std::string& post_id, int sentence_index, Eigen::VectorXd v) {
  if (sentence_index < 0) throw InvalidArgument("sentence index must be >= 0");
  if (dim_ && *dim_ != v.size())
    throw InvalidArgument("vector dimension " + std::to_string(v.size()) + " does not match store dimension " +
                          std::to_string(*dim_));
  dim_ = static_cast<int>(v.size());
  vectors_[{post_id, sentence_index}] = std::move(v);
}

namespace {

bool parse_double(std::string_view s, double& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

}  // namespace

VectorLoad read_sentence_vectors(std::istream& in) {
  VectorLoad result;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto skip = [&](const std::string& why) {
      ++result.skipped;
      result.diagnostics.push_back("line " + std::to_string(lineno) + ": " + why);
    };
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) {
      skip("expected post_id<TAB>sentence_index<TAB>values");
      continue;
    }
    const std::string post_id = line.substr(0, t1);
    const std::string_view idx_field(line.data() + t1 + 1, t2 - t1 - 1);
    int idx = 0;
    auto [p, ec] = std::from_chars(idx_field.data(), idx_field.data() + idx_field.size(), idx);
    if (post_id.empty() || ec != std::errc{} || p != idx_field.data() + idx_field.size() || idx < 0) {
      skip("bad post_id or sentence index");
      continue;
    }
    std::vector<double> values;
    std::string_view rest(line.data() + t2 + 1, line.size() - t2 - 1);
    bool ok = !rest.empty();
    while (ok) {
      const auto comma = rest.find(',');
      double v = 0.0;
      ok = parse_double(rest.substr(0, comma), v);
      if (ok) values.push_back(v);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (!ok) {
      skip("bad vector values");
      continue;
    }
    const auto dim = static_cast<int>(values.size());
    if (result.store.dimension() && *result.store.dimension() != dim)
      throw IoError("line " + std::to_string(lineno) + ": dimension " + std::to_string(dim) +
                    " does not match " + std::to_string(*result.store.dimension()));
    result.store.insert(post_id, idx, Eigen::Map<const Eigen::VectorXd>(values.data(), dim));
  }
  return result;
}

VectorLoad load_sentence_vectors(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read sentence vectors: " + path);
  return read_sentence_vectors(in);
}

void write_sentence_vectors(std::ostream& out, const VectorStore& store) {
  std::ostringstream buf;
  buf.precision(17);
  for (const auto& [key, v] : store.entries()) {
    buf << key.first << '\t' << key.second << '\t';
    for (Eigen::Index i = 0; i < v.size(); ++i) buf << (i ? "," : "") << v[i];
    buf << '\n';
  }
  out << buf.str();
}

Eigen::VectorXd post_vector(const VectorStore& store, const std::string& post_id, int n_sentences) {
  if (n_sentences < 1) throw InvalidArgument("post_vector: n_sentences must be >= 1");
  const int d = store.dimension().value_or(0);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(d);
  int found = 0;
  const auto& entries = store.entries();
  for (auto it = entries.lower_bound({post_id, 0}); it != entries.end() && it->first.first == post_id; ++it) {
    if (it->first.second >= n_sentences) break;
    sum += it->second;
    ++found;
  }
  if (found == 0) {
    store.note_missing();
    return sum;
  }
  return sum / found;
}

}  // namespace triage
