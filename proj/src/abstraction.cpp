#include "apz/abstraction.hpp"

#include "apz/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace apz {

std::string_view to_string(Condition c) { return c == Condition::Identical ? "identical" : "isomorphic"; }

namespace {

template <typename T>
double pearson_impl(std::span<const T> u, std::span<const T> v, long *zero_variance) {
  if (u.size() != v.size()) {
    throw DomainError("pearson: lengths " + std::to_string(u.size()) + " and " + std::to_string(v.size()));
  }
  if (u.size() < 2) throw DomainError("pearson: need at least two components");
  const double n = static_cast<double>(u.size());
  double mu = 0, mv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    mu += u[i];
    mv += v[i];
  }
  mu /= n;
  mv /= n;
  double suv = 0, suu = 0, svv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double a = u[i] - mu, b = v[i] - mv;
    suv += a * b;
    suu += a * a;
    svv += b * b;
  }
  if (suu == 0 || svv == 0) {
    if (zero_variance) ++*zero_variance;
    return 0;
  }
  return std::clamp(suv / std::sqrt(suu * svv), -1.0, 1.0);
}

std::vector<int> line_tokens(const ProbeDocument &d, int step) {
  const auto &line = d.lines.at(static_cast<std::size_t>(step));
  std::vector<int> out;
  for (std::size_t t = 0; t < d.tokens.size(); ++t) {
    if (d.tokens[t].first >= line.start && d.tokens[t].first < line.end) out.push_back(static_cast<int>(t));
  }
  return out;
}

std::string_view line_text(const ProbeDocument &d, int step) {
  return d.trace->steps.at(static_cast<std::size_t>(step)).text;
}

bool usable(const ProbeDocument &d, std::uint32_t step) {
  return d.pristine.empty() || (step < d.pristine.size() && d.pristine[step]);
}

struct Candidate {
  std::uint32_t a, b;
  std::uint32_t step_a, step_b;
};

} // namespace

double pearson(std::span<const double> u, std::span<const double> v, long *zero_variance) {
  return pearson_impl(u, v, zero_variance);
}

double pearson(std::span<const float> u, std::span<const float> v, long *zero_variance) {
  return pearson_impl(u, v, zero_variance);
}

std::vector<LinePair> sample_line_pairs(std::span<const ProbeDocument> docs, Condition condition, std::size_t k,
                                        std::uint64_t seed, SampleDiagnostics *diag) {
  SampleDiagnostics local;
  SampleDiagnostics &dg = diag ? *diag : local;
  dg = {};
  std::vector<Candidate> cands;
  auto token_count = [&](std::uint32_t d, int step) { return line_tokens(docs[d], step).size(); };

  for (const auto &d : docs) {
    if (!d.trace) throw DomainError("probe document without trace: " + d.puzzle_id);
    if (d.lines.size() < d.trace->steps.size()) throw DomainError("probe document lines missing: " + d.puzzle_id);
  }

  if (condition == Condition::Identical) {
    std::map<std::string_view, std::vector<std::pair<std::uint32_t, std::uint32_t>>> by_text;
    for (std::uint32_t d = 0; d < docs.size(); ++d) {
      for (std::uint32_t s = 0; s < docs[d].trace->steps.size(); ++s) {
        if (!usable(docs[d], s)) continue;
        by_text[line_text(docs[d], static_cast<int>(s))].emplace_back(d, s);
      }
    }
    for (const auto &[text, where] : by_text) {
      for (std::size_t i = 0; i < where.size(); ++i) {
        for (std::size_t j = i + 1; j < where.size(); ++j) {
          const auto [da, sa] = where[i];
          const auto [db, sb] = where[j];
          if (docs[da].key == docs[db].key || sa == sb) continue;
          if (token_count(da, static_cast<int>(sa)) != token_count(db, static_cast<int>(sb))) {
            ++dg.excluded_token_count;
            continue;
          }
          cands.push_back({da, db, sa, sb});
        }
      }
    }
  } else {
    std::map<std::string_view, std::vector<std::uint32_t>> by_key;
    for (std::uint32_t d = 0; d < docs.size(); ++d) by_key[docs[d].key].push_back(d);
    for (const auto &[key, members] : by_key) {
      for (std::size_t i = 0; i < members.size(); ++i) {
        for (std::size_t j = i + 1; j < members.size(); ++j) {
          const auto da = members[i], db = members[j];
          if (!traces_isomorphic(*docs[da].trace, *docs[db].trace)) continue;
          for (std::uint32_t s = 0; s < docs[da].trace->steps.size(); ++s) {
            if (!usable(docs[da], s) || !usable(docs[db], s)) continue;
            if (line_text(docs[da], static_cast<int>(s)) == line_text(docs[db], static_cast<int>(s))) continue;
            if (token_count(da, static_cast<int>(s)) != token_count(db, static_cast<int>(s))) {
              ++dg.excluded_token_count;
              continue;
            }
            cands.push_back({da, db, s, s});
          }
        }
      }
    }
  }

  dg.eligible = cands.size();
  if (cands.empty()) throw DomainError("no eligible " + std::string(to_string(condition)) + " line pairs");
  const std::size_t take = std::min(k, cands.size());
  Rng rng(seed);
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(cands.size() - i));
    std::swap(cands[i], cands[j]);
  }
  std::vector<LinePair> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    const Candidate &c = cands[i];
    LinePair p;
    p.condition = condition;
    p.puzzle_a = docs[c.a].puzzle_id;
    p.puzzle_b = docs[c.b].puzzle_id;
    p.step_a = static_cast<int>(c.step_a);
    p.step_b = static_cast<int>(c.step_b);
    p.tokens_a = line_tokens(docs[c.a], p.step_a);
    p.tokens_b = line_tokens(docs[c.b], p.step_b);
    out.push_back(std::move(p));
  }
  dg.returned = take;
  dg.shortfall = k - take;
  return out;
}

const ProfileRow *AbstractionProfile::find(int layer, Condition c) const {
  for (const auto &r : rows) {
    if (r.layer == layer && r.condition == c) return &r;
  }
  return nullptr;
}

AbstractionProfile layer_profile(std::span<const LinePair> pairs, const TensorLookup &lookup,
                                 std::span<const int> layers) {
  AbstractionProfile out;
  // per layer, per condition: the line means, summed in sorted order at the end
  std::vector<std::array<std::vector<double>, 2>> line_means(layers.size());
  for (const auto &p : pairs) {
    const ActivationTensor *ta = lookup(p.puzzle_a);
    const ActivationTensor *tb = lookup(p.puzzle_b);
    auto in_range = [](const ActivationTensor *t, const std::vector<int> &toks) {
      return std::all_of(toks.begin(), toks.end(),
                         [&](int i) { return i >= 0 && static_cast<std::uint32_t>(i) < t->n_tokens; });
    };
    if (!ta || !tb || p.tokens_a.size() != p.tokens_b.size() || p.tokens_a.empty() || !in_range(ta, p.tokens_a) ||
        !in_range(tb, p.tokens_b) || ta->hidden_dim != tb->hidden_dim) {
      ++out.dropped_pairs;
      continue;
    }
    for (std::size_t li = 0; li < layers.size(); ++li) {
      const int l = layers[li];
      if (l < 0 || static_cast<std::uint32_t>(l) >= ta->n_layers || static_cast<std::uint32_t>(l) >= tb->n_layers) {
        throw DomainError("layer " + std::to_string(l) + " outside activation tensor");
      }
      double sum = 0;
      for (std::size_t t = 0; t < p.tokens_a.size(); ++t) {
        sum += pearson(ta->vec(static_cast<std::size_t>(p.tokens_a[t]), static_cast<std::size_t>(l)),
                       tb->vec(static_cast<std::size_t>(p.tokens_b[t]), static_cast<std::size_t>(l)),
                       &out.zero_variance);
      }
      line_means[li][static_cast<std::size_t>(p.condition)].push_back(sum / static_cast<double>(p.tokens_a.size()));
    }
  }
  for (std::size_t li = 0; li < layers.size(); ++li) {
    for (Condition c : {Condition::Identical, Condition::Isomorphic}) {
      auto &v = line_means[li][static_cast<std::size_t>(c)];
      std::sort(v.begin(), v.end());
      ProfileRow row{layers[li], c, 0, static_cast<int>(v.size())};
      if (!v.empty()) row.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
      out.rows.push_back(row);
    }
  }
  return out;
}

} // namespace apz
