#include "triage/synthgen.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <unordered_set>

#include "triage/errors.hpp"
#include "triage/rng.hpp"
#include "triage/textprep.hpp"

namespace triage {

void SynthConfig::validate() const {
  if (n_users < 1) throw InvalidArgument("synth: n_users must be >= 1");
  if (n_threads < 1) throw InvalidArgument("synth: n_threads must be >= 1");
  if (months < 1) throw InvalidArgument("synth: months must be >= 1");
  if (n_labeled < 0) throw InvalidArgument("synth: n_labeled must be >= 0");
  double total = 0.0;
  for (double p : proportions) {
    if (p < 0.0) throw InvalidArgument("synth: class proportions must be nonnegative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-6) throw InvalidArgument("synth: class proportions must sum to 1");
  auto unit = [](double f, const char* name) {
    if (!(f >= 0.0 && f <= 1.0)) throw InvalidArgument(std::string("synth: ") + name + " must be in [0, 1]");
  };
  unit(moderator_fraction, "moderator_fraction");
  unit(declining_fraction, "declining_fraction");
  if (moderator_fraction >= 1.0) throw InvalidArgument("synth: moderator_fraction must be < 1");
  if (marker_pool_size < 1) throw InvalidArgument("synth: marker_pool_size must be >= 1");
  if (!(marker_strength >= 0.0)) throw InvalidArgument("synth: marker_strength must be >= 0");
  if (topics < 1) throw InvalidArgument("synth: topics must be >= 1");
  if (sentence_vector_dim < 1) throw InvalidArgument("synth: sentence_vector_dim must be >= 1");
}

namespace {

constexpr std::string_view kOnsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r",
                                        "s", "t", "v", "z", "br", "kr", "st", "tr", "pl", "gl"};
constexpr std::string_view kVowels[] = {"a", "e", "i", "o", "u", "ai", "ou"};
constexpr std::string_view kFunctionWords[] = {"i", "the", "and", "to", "my", "it", "is", "was", "so", "but", "a", "of"};

constexpr int kLevels = kNumClasses;
constexpr std::array<double, kLevels> kPositiveRate = {2.2, 0.5, 0.3, 0.2};
constexpr std::array<double, kLevels> kMildRate = {0.3, 3.4, 1.4, 0.8};
constexpr std::array<double, kLevels> kAcuteRate = {0.08, 0.5, 3.0, 2.2};
constexpr std::array<double, kLevels> kDeathRate = {0.02, 0.05, 0.3, 2.4};
constexpr std::array<double, kLevels> kClueProb = {0.0, 0.03, 0.12, 0.65};
constexpr std::array<double, kLevels> kModeratorReplyProb = {0.12, 0.4, 0.5, 0.6};

int poisson(Rng& rng, double lambda) {
  if (lambda <= 0.0) return 0;
  const double limit = std::exp(-lambda);
  int k = 0;
  double p = rng.uniform();
  while (p > limit) {
    ++k;
    p *= rng.uniform();
  }
  return k;
}

double normal(Rng& rng) {
  const double u1 = 1.0 - rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& v) {
  return v[static_cast<std::size_t>(rng.below(v.size()))];
}

std::vector<std::string> pseudo_words(Rng& rng, std::size_t n) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  constexpr auto n_on = std::size(kOnsets);
  constexpr auto n_vo = std::size(kVowels);
  while (out.size() < n) {
    std::string w;
    for (int s = 0; s < 3; ++s) {
      w += kOnsets[rng.below(n_on)];
      w += kVowels[rng.below(n_vo)];
    }
    if (seen.insert(w).second) out.push_back(std::move(w));
  }
  return out;
}

struct Pools {
  std::vector<std::string> filler;
  std::vector<double> filler_weights;
  std::vector<std::string> positive, mild, acute, death, support;
  std::vector<std::vector<std::string>> topics;
  std::vector<std::pair<std::string, std::string>> clues;
};

Pools make_pools(Rng& rng, const SynthConfig& cfg) {
  const auto m = static_cast<std::size_t>(cfg.marker_pool_size);
  constexpr std::size_t kFiller = 300, kTopicWords = 25, kSupport = 60, kClues = 20;
  const auto t = static_cast<std::size_t>(cfg.topics);
  auto words = pseudo_words(rng, kFiller + 4 * m + kSupport + t * kTopicWords + 2 * kClues);
  std::size_t at = 0;
  auto take = [&](std::size_t n) {
    std::vector<std::string> v(words.begin() + static_cast<std::ptrdiff_t>(at),
                               words.begin() + static_cast<std::ptrdiff_t>(at + n));
    at += n;
    return v;
  };
  Pools p;
  p.filler = take(kFiller);
  for (std::size_t i = 0; i < kFiller; ++i) p.filler_weights.push_back(1.0 / static_cast<double>(i + 1));
  p.positive = take(m);
  p.mild = take(m);
  p.acute = take(m);
  p.death = take(m);
  p.support = take(kSupport);
  for (std::size_t k = 0; k < t; ++k) p.topics.push_back(take(kTopicWords));
  auto clue_words = take(2 * kClues);
  for (std::size_t i = 0; i < kClues; ++i) p.clues.emplace_back(clue_words[2 * i], clue_words[2 * i + 1]);
  return p;
}

// Topic preference shifts from the first topics (most severe) to the last (GREEN).
std::vector<double> topic_weights(int level, int topics) {
  std::vector<double> w(static_cast<std::size_t>(topics));
  const double center = topics == 1 ? 0.0 : (3.0 - level) / 3.0 * (topics - 1);
  const double width = std::max(1.0, topics / 4.0);
  for (int k = 0; k < topics; ++k) w[static_cast<std::size_t>(k)] = std::exp(-std::pow((k - center) / width, 2.0));
  return w;
}

std::string join_sentences(const std::vector<std::vector<std::string>>& sentences) {
  std::string out;
  for (const auto& s : sentences) {
    if (s.empty()) continue;
    if (!out.empty()) out += ' ';
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i) out += ' ';
      out += s[i];
    }
    out += '.';
  }
  return out;
}

struct Text {
  std::string subject;
  std::string body;
};

Text member_text(Rng& rng, const Pools& pools, const SynthConfig& cfg, int level) {
  const auto L = static_cast<std::size_t>(level);
  const int n_sent = 3 + static_cast<int>(rng.below(4));
  std::vector<std::vector<std::string>> sentences(static_cast<std::size_t>(n_sent));
  const auto topic = rng.categorical(topic_weights(level, cfg.topics));
  for (auto& s : sentences) {
    const int len = 6 + static_cast<int>(rng.below(7));
    for (int i = 0; i < len; ++i) {
      const double u = rng.uniform();
      if (u < 0.25)
        s.push_back(pick(rng, pools.topics[topic]));
      else if (u < 0.37)
        s.emplace_back(kFunctionWords[rng.below(std::size(kFunctionWords))]);
      else
        s.push_back(pools.filler[rng.categorical(pools.filler_weights)]);
    }
  }
  auto& last = sentences.back();
  auto insert_at = [&](std::vector<std::string>& s, std::string w) {
    s.insert(s.begin() + static_cast<std::ptrdiff_t>(rng.below(s.size() + 1)), std::move(w));
  };
  auto scatter = [&](const std::vector<std::string>& pool, int n, double last_share) {
    for (int i = 0; i < n; ++i) {
      auto& target = rng.bernoulli(last_share) ? last : sentences[rng.below(sentences.size())];
      insert_at(target, pick(rng, pool));
    }
  };
  const double k = cfg.marker_strength;
  scatter(pools.positive, poisson(rng, k * kPositiveRate[L]), 0.2);
  scatter(pools.mild, poisson(rng, k * kMildRate[L]), 0.2);
  scatter(pools.acute, poisson(rng, k * kAcuteRate[L]), 0.4);
  scatter(pools.death, poisson(rng, k * kDeathRate[L]), 0.8);
  if (rng.bernoulli(kClueProb[L])) {
    const auto& [a, b] = pick(rng, pools.clues);
    const auto pos = static_cast<std::ptrdiff_t>(rng.below(last.size() + 1));
    last.insert(last.begin() + pos, {a, b});
  }
  Text t;
  t.body = join_sentences(sentences);
  t.subject = pick(rng, pools.topics[topic]) + ' ' + pick(rng, pools.topics[topic]);
  return t;
}

std::string moderator_text(Rng& rng, const Pools& pools) {
  std::vector<std::vector<std::string>> sentences(2 + rng.below(2));
  for (auto& s : sentences) {
    const int len = 5 + static_cast<int>(rng.below(5));
    for (int i = 0; i < len; ++i)
      s.push_back(rng.bernoulli(0.4) ? pick(rng, pools.support) : pools.filler[rng.categorical(pools.filler_weights)]);
  }
  return join_sentences(sentences);
}

Timestamp month_start(int month_index) {
  using namespace std::chrono;
  const year_month ym = year{2015} / January + months{month_index};
  return sys_days{ym / 1};
}

struct Slot {
  Timestamp time;
  int user;
  int level;
  bool must_start;
};

struct DraftPost {
  Timestamp time;
  int author;  // < n_users: member, otherwise moderator
  int thread;
  int level;  // -1 for moderator posts
  Text text;
};

std::string fixed6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

// Eight probabilities that print with six decimals and sum to exactly 1.
std::string emotion_row(std::array<double, 8> w) {
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  std::array<long, 8> micro{};
  long sum = 0;
  for (std::size_t i = 0; i < 7; ++i) {
    micro[i] = std::lround(w[i] / total * 1e6);
    sum += micro[i];
  }
  micro[7] = 1000000 - sum;
  std::string out;
  for (long v : micro) out += '\t' + fixed6(static_cast<double>(v) / 1e6);
  return out;
}

void build_fixtures(Rng& rng, const Pools& pools, SynthCorpus& out) {
  // fear, amusement, anger, annoy, apathy, happiness, inspiration, sadness
  const std::array<double, 8> positive = {0.03, 0.2, 0.02, 0.03, 0.04, 0.38, 0.26, 0.04};
  const std::array<double, 8> mild = {0.06, 0.03, 0.1, 0.3, 0.24, 0.03, 0.03, 0.21};
  const std::array<double, 8> acute = {0.3, 0.02, 0.1, 0.06, 0.08, 0.02, 0.02, 0.4};
  const std::array<double, 8> death = {0.42, 0.01, 0.05, 0.03, 0.05, 0.01, 0.01, 0.42};

  std::string cats = "posemo\tnegemo\tanx\tsad\tanger\tdeath\tsocial\tcogproc\n";
  std::string emo, subj;
  auto jitter = [&](std::array<double, 8> w) {
    for (double& x : w) x *= 0.8 + 0.4 * rng.uniform();
    return w;
  };
  for (std::size_t i = 0; i < pools.positive.size(); ++i) {
    const auto& w = pools.positive[i];
    cats += w + "\tposemo\n";
    emo += w + emotion_row(jitter(positive)) + '\n';
    subj += w + (i % 2 ? "\tweak\tpositive\n" : "\tstrong\tpositive\n");
  }
  for (std::size_t i = 0; i < pools.mild.size(); ++i) {
    const auto& w = pools.mild[i];
    cats += w + (i % 2 ? "\tnegemo,anger\n" : "\tnegemo,sad\n");
    emo += w + emotion_row(jitter(mild)) + '\n';
    subj += w + "\tweak\tnegative\n";
  }
  for (std::size_t i = 0; i < pools.acute.size(); ++i) {
    const auto& w = pools.acute[i];
    cats += w + (i % 2 ? "\tnegemo,anx\n" : "\tnegemo,sad\n");
    emo += w + emotion_row(jitter(acute)) + '\n';
    subj += w + "\tstrong\tnegative\n";
  }
  for (const auto& w : pools.death) {
    cats += w + "\tnegemo,death\n";
    emo += w + emotion_row(jitter(death)) + '\n';
    subj += w + "\tstrong\tnegative\n";
  }
  for (const auto& w : pools.support) {
    cats += w + "\tsocial\n";
    subj += w + "\tweak\tpositive\n";
  }
  for (std::size_t i = 0; i < pools.filler.size(); ++i) {
    const auto& w = pools.filler[i];
    if (i < 40) cats += w + "\tcogproc\n";
    if (i % 3 == 0) {
      std::array<double, 8> flat;
      flat.fill(1.0);
      emo += w + emotion_row(jitter(flat)) + '\n';
    }
    if (i % 10 == 0) subj += w + "\tweak\tneutral\n";
  }
  std::string clues;
  for (const auto& [a, b] : pools.clues) clues += a + ' ' + b + '\n';
  out.categories_tsv = std::move(cats);
  out.emotions_tsv = std::move(emo);
  out.subjectivity_tsv = std::move(subj);
  out.clues_txt = std::move(clues);
}

std::string numbered(char prefix, std::size_t i, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%0*zu", prefix, width, i);
  return buf;
}

}  // namespace

SynthCorpus generate(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const Pools pools = make_pools(rng, cfg);
  SynthCorpus out;
  build_fixtures(rng, pools, out);

  const int n_mod = std::max(
      1, static_cast<int>(std::lround(cfg.n_users * cfg.moderator_fraction / (1.0 - cfg.moderator_fraction))));
  const std::span<const double> props(cfg.proportions.data(), cfg.proportions.size());

  // Per-user posting schedule.
  std::vector<Slot> slots;
  std::vector<std::string> user_ids;
  for (int u = 0; u < cfg.n_users; ++u) {
    user_ids.push_back(numbered('u', static_cast<std::size_t>(u + 1), 4));
    const bool declining = cfg.months >= 3 && rng.bernoulli(cfg.declining_fraction);
    int span;
    if (declining)
      span = std::min(cfg.months, 3 + static_cast<int>(rng.below(4)));
    else
      span = rng.bernoulli(0.45) ? 1 : std::min(cfg.months, 2 + static_cast<int>(rng.below(4)));
    const int start = static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.months - span + 1)));
    const int base = static_cast<int>(rng.categorical(props));
    const int top = 2 + static_cast<int>(rng.below(2));
    if (declining) out.declining_users.insert(user_ids.back());
    out.user_first_month[user_ids.back()] = start;
    for (int i = 0; i < span; ++i) {
      const int n_posts = 1 + static_cast<int>(rng.below(declining ? 3 : 5));
      const Timestamp m0 = month_start(start + i);
      for (int j = 0; j < n_posts; ++j) {
        int level;
        if (declining) {
          level = static_cast<int>(std::lround(top * (1.0 - static_cast<double>(i) / (span - 1))));
          if (rng.bernoulli(0.15)) level = std::clamp(level + (rng.bernoulli(0.5) ? 1 : -1), 0, 3);
        } else {
          level = rng.bernoulli(0.55) ? base : static_cast<int>(rng.categorical(props));
        }
        const auto offset = std::chrono::seconds(static_cast<std::int64_t>(rng.below(27 * 86400)));
        slots.push_back({m0 + offset, u, level, declining});
      }
    }
  }
  std::sort(slots.begin(), slots.end(), [](const Slot& a, const Slot& b) {
    return a.time != b.time ? a.time < b.time : a.user < b.user;
  });

  // Thread assembly: each slot starts a thread or joins one that was active in the last three days.
  std::vector<DraftPost> drafts;
  struct ThreadState {
    Timestamp last;
  };
  std::vector<ThreadState> threads;
  const double p_start = std::min(1.0, static_cast<double>(cfg.n_threads) / std::max<std::size_t>(1, slots.size()));
  for (const Slot& s : slots) {
    std::vector<int> open;
    for (int t = static_cast<int>(threads.size()) - 1; t >= 0; --t) {
      const auto age = s.time - threads[static_cast<std::size_t>(t)].last;
      if (age < std::chrono::seconds(0)) continue;
      if (age > std::chrono::hours(72)) continue;
      open.push_back(t);
      if (open.size() >= 8) break;
    }
    int thread;
    if (s.must_start || open.empty() || rng.bernoulli(p_start)) {
      thread = static_cast<int>(threads.size());
      threads.push_back({s.time});
    } else {
      thread = open[static_cast<std::size_t>(rng.below(open.size()))];
    }
    threads[static_cast<std::size_t>(thread)].last = std::max(threads[static_cast<std::size_t>(thread)].last, s.time);
    drafts.push_back({s.time, s.user, thread, s.level, member_text(rng, pools, cfg, s.level)});
  }
  const std::size_t n_member_posts = drafts.size();
  for (std::size_t i = 0; i < n_member_posts; ++i) {
    const DraftPost d = drafts[i];
    if (!rng.bernoulli(kModeratorReplyProb[static_cast<std::size_t>(d.level)])) continue;
    const double hours = 0.2 - 4.0 * std::log(1.0 - rng.uniform());
    const auto delay = std::chrono::seconds(static_cast<std::int64_t>(hours * 3600.0));
    const int mod = cfg.n_users + static_cast<int>(rng.below(static_cast<std::uint64_t>(n_mod)));
    drafts.push_back({d.time + delay, mod, d.thread, -1, {"", moderator_text(rng, pools)}});
  }
  std::stable_sort(drafts.begin(), drafts.end(), [](const DraftPost& a, const DraftPost& b) { return a.time < b.time; });

  // Thread subjects come from each thread's first post.
  std::vector<std::string> subjects(threads.size());
  std::vector<int> thread_posts(threads.size(), 0);
  for (const auto& d : drafts)
    if (subjects[static_cast<std::size_t>(d.thread)].empty() && d.level >= 0)
      subjects[static_cast<std::size_t>(d.thread)] = d.text.subject;

  std::vector<Post> posts;
  posts.reserve(drafts.size());
  std::array<std::vector<std::size_t>, kNumClasses> member_by_class;
  for (std::size_t i = 0; i < drafts.size(); ++i) {
    const DraftPost& d = drafts[i];
    Post p;
    p.post_id = numbered('p', i + 1, 6);
    p.thread_id = numbered('t', static_cast<std::size_t>(d.thread + 1), 5);
    const bool member = d.author < cfg.n_users;
    p.author_id = member ? user_ids[static_cast<std::size_t>(d.author)]
                         : numbered('m', static_cast<std::size_t>(d.author - cfg.n_users + 1), 2);
    p.author_role = member ? AuthorRole::Member : AuthorRole::Moderator;
    p.timestamp = d.time;
    const auto& subject = subjects[static_cast<std::size_t>(d.thread)];
    p.subject = thread_posts[static_cast<std::size_t>(d.thread)]++ == 0 ? subject : "Re: " + subject;
    p.body = d.text.body;
    const int level = std::max(0, d.level);
    p.views = 10 + poisson(rng, 20.0 + 8.0 * level);
    p.kudos = poisson(rng, level == 0 ? 1.5 : 0.8);
    if (member) {
      out.truth[p.post_id] = label_at(d.level);
      member_by_class[static_cast<std::size_t>(d.level)].push_back(posts.size());
    }
    const auto n_sent = split_sentences(p.body).size();
    for (std::size_t s = 0; s < n_sent; ++s) {
      Eigen::VectorXd v(cfg.sentence_vector_dim);
      for (int j = 0; j < cfg.sentence_vector_dim; ++j) v[j] = 0.8 * normal(rng);
      v[0] += 0.25 * level;
      out.vectors.insert(p.post_id, static_cast<int>(s), std::move(v));
    }
    posts.push_back(std::move(p));
  }

  // Labeled subset with exact largest-remainder class counts.
  std::array<int, kNumClasses> target{};
  std::array<double, kNumClasses> remainder{};
  int assigned = 0;
  for (int c = 0; c < kNumClasses; ++c) {
    const double exact = cfg.n_labeled * cfg.proportions[static_cast<std::size_t>(c)];
    target[static_cast<std::size_t>(c)] = static_cast<int>(std::floor(exact));
    remainder[static_cast<std::size_t>(c)] = exact - std::floor(exact);
    assigned += target[static_cast<std::size_t>(c)];
  }
  std::array<int, kNumClasses> order = {0, 1, 2, 3};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return remainder[static_cast<std::size_t>(a)] > remainder[static_cast<std::size_t>(b)];
  });
  for (int i = 0; assigned < cfg.n_labeled; ++i, ++assigned) ++target[static_cast<std::size_t>(order[static_cast<std::size_t>(i % kNumClasses)])];
  for (int c = 0; c < kNumClasses; ++c) {
    auto& pool = member_by_class[static_cast<std::size_t>(c)];
    const auto want = static_cast<std::size_t>(target[static_cast<std::size_t>(c)]);
    if (pool.size() < want)
      throw InvalidArgument("synth: only " + std::to_string(pool.size()) + " " +
                            std::string(to_string(label_at(c))) + " posts generated, " + std::to_string(want) +
                            " labeled ones requested");
    rng.shuffle(pool.begin(), pool.end());
    for (std::size_t i = 0; i < want; ++i) posts[pool[i]].label = label_at(c);
  }
  out.corpus = Corpus(std::move(posts));
  return out;
}

namespace {

std::filesystem::path stem_path(const std::string& corpus_path, const std::string& suffix) {
  const std::filesystem::path p(corpus_path);
  return p.parent_path() / (p.stem().string() + suffix);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

}  // namespace

std::string sibling_lexicon_dir(const std::string& corpus_path) {
  return (std::filesystem::path(corpus_path).parent_path() / "lexicons").string();
}

std::string sibling_vectors_path(const std::string& corpus_path) {
  return stem_path(corpus_path, ".vectors.tsv").string();
}

std::string sibling_truth_path(const std::string& corpus_path) { return stem_path(corpus_path, ".truth.tsv").string(); }

void write_synth(const SynthCorpus& synth, const std::string& corpus_path, const std::string& lexicon_dir) {
  namespace fs = std::filesystem;
  const fs::path parent = fs::path(corpus_path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  write_corpus(corpus_path, synth.corpus);
  std::string truth;
  for (const auto& [id, label] : synth.truth) truth += id + '\t' + std::string(to_string(label)) + '\n';
  write_text(sibling_truth_path(corpus_path), truth);
  {
    std::ofstream out(sibling_vectors_path(corpus_path), std::ios::binary);
    if (!out) throw IoError("cannot write " + sibling_vectors_path(corpus_path));
    write_sentence_vectors(out, synth.vectors);
  }
  fs::create_directories(lexicon_dir);
  write_text(fs::path(lexicon_dir) / "categories.tsv", synth.categories_tsv);
  write_text(fs::path(lexicon_dir) / "emotions.tsv", synth.emotions_tsv);
  write_text(fs::path(lexicon_dir) / "subjectivity.tsv", synth.subjectivity_tsv);
  write_text(fs::path(lexicon_dir) / "clues.txt", synth.clues_txt);
}

std::map<std::string, SeverityLabel> load_truth(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read truth file: " + path);
  std::map<std::string, SeverityLabel> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    auto label = tab == std::string::npos ? std::nullopt : parse_label(line.substr(tab + 1));
    if (!label) throw IoError("truth file line " + std::to_string(lineno) + ": expected post_id<TAB>label");
    out[line.substr(0, tab)] = *label;
  }
  return out;
}

}  // namespace triage
