#include "apz/classifier.hpp"

#include "apz/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace apz {

void append_examples(std::vector<ProbeExample> &out, const ActivationTensor &tensor,
                     std::span<const LabeledStatement> statements, std::span<const int> layers,
                     const std::string &puzzle_id, BuildDiagnostics &diag) {
  if (layers.empty()) throw DomainError("no layers selected");
  for (int l : layers) {
    if (l < 0 || static_cast<std::uint32_t>(l) >= tensor.n_layers) {
      throw DomainError("layer " + std::to_string(l) + " outside tensor with " + std::to_string(tensor.n_layers) +
                        " layers");
    }
  }
  const std::size_t dim = tensor.hidden_dim;
  const std::size_t channels = layers.size() * dim;
  for (std::size_t s = 0; s < statements.size(); ++s) {
    const auto &st = statements[s];
    if (!st.token_range) {
      ++diag.skipped_unaligned;
      continue;
    }
    const auto [first, last] = *st.token_range;
    if (first < 0 || last < first || static_cast<std::uint32_t>(last) >= tensor.n_tokens) {
      ++diag.skipped_out_of_range;
      continue;
    }
    if (last - first + 1 < kProbePositions) {
      ++diag.skipped_short;
      continue;
    }
    ProbeExample ex;
    ex.label = st.label;
    ex.puzzle_id = puzzle_id;
    ex.statement_index = static_cast<int>(s);
    ex.features.resize(kProbePositions * channels);
    for (int p = 0; p < kProbePositions; ++p) {
      const auto token = static_cast<std::size_t>(last - kProbePositions + 1 + p);
      for (std::size_t li = 0; li < layers.size(); ++li) {
        const auto v = tensor.vec(token, static_cast<std::size_t>(layers[li]));
        std::copy(v.begin(), v.end(), ex.features.begin() + static_cast<std::ptrdiff_t>(p * channels + li * dim));
      }
    }
    out.push_back(std::move(ex));
    ++diag.examples;
  }
}

std::size_t ProbeArchitecture::parameter_count() const {
  const auto ci = static_cast<std::size_t>(in_channels), co = static_cast<std::size_t>(conv_channels);
  const auto k = static_cast<std::size_t>(kernel), h1 = static_cast<std::size_t>(hidden1),
             h2 = static_cast<std::size_t>(hidden2), f = static_cast<std::size_t>(flat());
  return co * ci * k + co + h1 * f + h1 + h2 * h1 + h2 + h2 + 1;
}

ProbeModel::ProbeModel(const ProbeArchitecture &arch) : arch_(arch) {
  if (arch.in_channels <= 0 || arch.conv_channels <= 0 || arch.hidden1 <= 0 || arch.hidden2 <= 0 ||
      arch.kernel <= 0 || arch.positions < arch.kernel) {
    throw DomainError("invalid probe architecture");
  }
  conv_w = Eigen::MatrixXd::Zero(arch.conv_channels, arch.in_channels * arch.kernel);
  conv_b = Eigen::VectorXd::Zero(arch.conv_channels);
  w1 = Eigen::MatrixXd::Zero(arch.hidden1, arch.flat());
  b1 = Eigen::VectorXd::Zero(arch.hidden1);
  w2 = Eigen::MatrixXd::Zero(arch.hidden2, arch.hidden1);
  b2 = Eigen::VectorXd::Zero(arch.hidden2);
  w3 = Eigen::RowVectorXd::Zero(arch.hidden2);
  feature_mean = Eigen::VectorXd::Zero(arch.in_channels);
  feature_scale = Eigen::VectorXd::Ones(arch.in_channels);
  const auto held = static_cast<std::size_t>(conv_w.size() + conv_b.size() + w1.size() + b1.size() + w2.size() +
                                             b2.size() + w3.size() + 1);
  if (held != arch.parameter_count()) throw DomainError("probe parameter count disagrees with architecture");
}

namespace {

template <typename M>
void fill_normal(M &m, Rng &rng, double stddev) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = stddev * rng.normal();
  }
}

template <typename M>
void flatten_into(const M &m, std::vector<double> &out) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
  }
}

template <typename M>
void unflatten_from(M &m, std::span<const double> in, std::size_t &pos) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = in[pos++];
  }
}

double softplus(double s) { return std::max(s, 0.0) + std::log1p(std::exp(-std::abs(s))); }
double sigmoid(double s) { return s >= 0 ? 1.0 / (1.0 + std::exp(-s)) : std::exp(s) / (1.0 + std::exp(s)); }

struct Activations {
  Eigen::MatrixXd unfolded; // (in * kernel) x (batch * conv_positions)
  Eigen::MatrixXd conv_pre; // conv_channels x (batch * conv_positions)
  Eigen::MatrixXd flat;     // flat x batch
  Eigen::MatrixXd z1, a1, z2, a2;
  Eigen::RowVectorXd logits;
};

void run_forward(const ProbeModel &m, std::span<const ProbeExample *const> batch, Activations &act) {
  const auto &arch = m.architecture();
  const int ci = arch.in_channels, k = arch.kernel, pc = arch.conv_positions(), co = arch.conv_channels;
  const auto b = static_cast<Eigen::Index>(batch.size());
  const std::size_t expected = static_cast<std::size_t>(arch.positions) * static_cast<std::size_t>(ci);
  act.unfolded.resize(ci * k, b * pc);
  for (Eigen::Index e = 0; e < b; ++e) {
    const auto &f = batch[static_cast<std::size_t>(e)]->features;
    if (f.size() != expected) {
      throw DomainError("example has " + std::to_string(f.size()) + " features, model expects " +
                        std::to_string(expected));
    }
    for (int t = 0; t < pc; ++t) {
      for (int c = 0; c < ci; ++c) {
        for (int tap = 0; tap < k; ++tap) {
          const double x = f[static_cast<std::size_t>((t + tap) * ci + c)];
          act.unfolded(c * k + tap, e * pc + t) = (x - m.feature_mean(c)) * m.feature_scale(c);
        }
      }
    }
  }
  act.conv_pre.noalias() = m.conv_w * act.unfolded;
  act.conv_pre.colwise() += m.conv_b;
  act.flat.resize(co * pc, b);
  for (Eigen::Index e = 0; e < b; ++e) {
    for (int o = 0; o < co; ++o) {
      for (int t = 0; t < pc; ++t) act.flat(o * pc + t, e) = std::max(act.conv_pre(o, e * pc + t), 0.0);
    }
  }
  act.z1.noalias() = m.w1 * act.flat;
  act.z1.colwise() += m.b1;
  act.a1 = act.z1.cwiseMax(0.0);
  act.z2.noalias() = m.w2 * act.a1;
  act.z2.colwise() += m.b2;
  act.a2 = act.z2.cwiseMax(0.0);
  act.logits.noalias() = m.w3 * act.a2;
  act.logits.array() += m.b3;
}

double target(const ProbeExample &x) { return x.label == Label::Correct ? 1.0 : 0.0; }

} // namespace

void ProbeModel::initialize(std::uint64_t seed) {
  Rng rng(derive_seed(seed, "probe-init"));
  fill_normal(conv_w, rng, std::sqrt(2.0 / (arch_.in_channels * arch_.kernel)));
  fill_normal(w1, rng, std::sqrt(2.0 / arch_.flat()));
  fill_normal(w2, rng, std::sqrt(2.0 / arch_.hidden1));
  fill_normal(w3, rng, std::sqrt(1.0 / arch_.hidden2));
  conv_b.setZero();
  b1.setZero();
  b2.setZero();
  b3 = 0;
}

std::vector<double> ProbeModel::parameters() const {
  std::vector<double> out;
  out.reserve(arch_.parameter_count());
  flatten_into(conv_w, out);
  flatten_into(conv_b, out);
  flatten_into(w1, out);
  flatten_into(b1, out);
  flatten_into(w2, out);
  flatten_into(b2, out);
  flatten_into(w3, out);
  out.push_back(b3);
  return out;
}

void ProbeModel::set_parameters(std::span<const double> values) {
  if (values.size() != arch_.parameter_count()) {
    throw DomainError("expected " + std::to_string(arch_.parameter_count()) + " parameters, got " +
                      std::to_string(values.size()));
  }
  std::size_t pos = 0;
  unflatten_from(conv_w, values, pos);
  unflatten_from(conv_b, values, pos);
  unflatten_from(w1, values, pos);
  unflatten_from(b1, values, pos);
  unflatten_from(w2, values, pos);
  unflatten_from(b2, values, pos);
  unflatten_from(w3, values, pos);
  b3 = values[pos];
}

double ProbeModel::logit(const ProbeExample &x) const {
  const ProbeExample *p = &x;
  Activations act;
  run_forward(*this, std::span<const ProbeExample *const>(&p, 1), act);
  return act.logits(0);
}

double ProbeModel::forward(const ProbeExample &x) const { return sigmoid(logit(x)); }

double ProbeModel::loss(std::span<const ProbeExample *const> batch, std::vector<double> *grad) const {
  if (batch.empty()) throw DomainError("empty batch");
  Activations act;
  run_forward(*this, batch, act);
  const auto b = static_cast<Eigen::Index>(batch.size());
  double total = 0;
  Eigen::RowVectorXd ds(b);
  for (Eigen::Index e = 0; e < b; ++e) {
    const double s = act.logits(e), y = target(*batch[static_cast<std::size_t>(e)]);
    total += softplus(s) - y * s;
    ds(e) = (sigmoid(s) - y) / static_cast<double>(b);
  }
  if (!grad) return total / static_cast<double>(b);

  const int pc = arch_.conv_positions(), co = arch_.conv_channels;
  const Eigen::RowVectorXd g_w3 = ds * act.a2.transpose();
  const double g_b3 = ds.sum();
  const Eigen::MatrixXd d_z2 = (w3.transpose() * ds).cwiseProduct((act.z2.array() > 0).cast<double>().matrix());
  const Eigen::MatrixXd g_w2 = d_z2 * act.a1.transpose();
  const Eigen::VectorXd g_b2 = d_z2.rowwise().sum();
  const Eigen::MatrixXd d_z1 = (w2.transpose() * d_z2).cwiseProduct((act.z1.array() > 0).cast<double>().matrix());
  const Eigen::MatrixXd g_w1 = d_z1 * act.flat.transpose();
  const Eigen::VectorXd g_b1 = d_z1.rowwise().sum();
  const Eigen::MatrixXd d_flat = w1.transpose() * d_z1;
  Eigen::MatrixXd d_conv(co, b * pc);
  for (Eigen::Index e = 0; e < b; ++e) {
    for (int o = 0; o < co; ++o) {
      for (int t = 0; t < pc; ++t) {
        d_conv(o, e * pc + t) = act.conv_pre(o, e * pc + t) > 0 ? d_flat(o * pc + t, e) : 0.0;
      }
    }
  }
  const Eigen::MatrixXd g_conv_w = d_conv * act.unfolded.transpose();
  const Eigen::VectorXd g_conv_b = d_conv.rowwise().sum();

  grad->clear();
  grad->reserve(arch_.parameter_count());
  flatten_into(g_conv_w, *grad);
  flatten_into(g_conv_b, *grad);
  flatten_into(g_w1, *grad);
  flatten_into(g_b1, *grad);
  flatten_into(g_w2, *grad);
  flatten_into(g_b2, *grad);
  flatten_into(g_w3, *grad);
  grad->push_back(g_b3);
  return total / static_cast<double>(b);
}

namespace {

std::vector<const ProbeExample *> canonical_order(std::span<const ProbeExample> xs) {
  std::vector<const ProbeExample *> out;
  out.reserve(xs.size());
  for (const auto &x : xs) out.push_back(&x);
  std::stable_sort(out.begin(), out.end(), [](const ProbeExample *a, const ProbeExample *b) {
    if (a->puzzle_id != b->puzzle_id) return a->puzzle_id < b->puzzle_id;
    if (a->statement_index != b->statement_index) return a->statement_index < b->statement_index;
    return a->features < b->features;
  });
  return out;
}

constexpr std::size_t kEvalChunk = 256;

} // namespace

ProbeMetrics evaluate(const ProbeModel &model, std::span<const ProbeExample> examples) {
  if (examples.empty()) throw DomainError("evaluate: no examples");
  ProbeMetrics m;
  std::vector<const ProbeExample *> ptrs;
  for (const auto &x : examples) ptrs.push_back(&x);
  Activations act;
  for (std::size_t start = 0; start < ptrs.size(); start += kEvalChunk) {
    const std::size_t len = std::min(kEvalChunk, ptrs.size() - start);
    run_forward(model, std::span<const ProbeExample *const>(ptrs.data() + start, len), act);
    for (std::size_t e = 0; e < len; ++e) {
      const bool predicted_correct = sigmoid(act.logits(static_cast<Eigen::Index>(e))) >= 0.5;
      const bool correct = ptrs[start + e]->label == Label::Correct;
      if (predicted_correct && correct) ++m.true_correct;
      if (predicted_correct && !correct) ++m.false_correct;
      if (!predicted_correct && !correct) ++m.true_incorrect;
      if (!predicted_correct && correct) ++m.false_incorrect;
    }
  }
  auto ratio = [](int a, int b) { return b == 0 ? 0.0 : static_cast<double>(a) / b; };
  m.count = static_cast<int>(examples.size());
  m.accuracy = ratio(m.true_correct + m.true_incorrect, m.count);
  m.precision_correct = ratio(m.true_correct, m.true_correct + m.false_correct);
  m.recall_correct = ratio(m.true_correct, m.true_correct + m.false_incorrect);
  m.precision_incorrect = ratio(m.true_incorrect, m.true_incorrect + m.false_incorrect);
  m.recall_incorrect = ratio(m.true_incorrect, m.true_incorrect + m.false_correct);
  return m;
}

TrainResult train(std::span<const ProbeExample> training, std::span<const ProbeExample> validation,
                  const TrainConfig &cfg) {
  if (cfg.epochs <= 0) throw DomainError("train: epochs must be positive");
  if (cfg.batch_size <= 0) throw DomainError("train: batch_size must be positive");
  if (!(cfg.learning_rate > 0)) throw DomainError("train: learning_rate must be positive");
  if (training.empty()) throw DomainError("train: no training examples");
  const std::size_t width = training.front().features.size();
  if (width == 0 || width % kProbePositions != 0) throw DomainError("train: malformed feature block");
  bool has_correct = false, has_incorrect = false;
  for (const auto &x : training) {
    if (x.features.size() != width) throw DomainError("train: inconsistent feature sizes");
    (x.label == Label::Correct ? has_correct : has_incorrect) = true;
  }
  if (!has_correct || !has_incorrect) throw DomainError("train: training data has a single class");

  ProbeArchitecture arch = cfg.arch;
  arch.positions = kProbePositions;
  arch.in_channels = static_cast<int>(width / kProbePositions);
  ProbeModel model(arch);

  std::vector<const ProbeExample *> order = canonical_order(training);
  // standardization statistics, accumulated in canonical order
  const int ci = arch.in_channels;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(ci), sum_sq = Eigen::VectorXd::Zero(ci);
  for (const auto *x : order) {
    for (int p = 0; p < kProbePositions; ++p) {
      for (int c = 0; c < ci; ++c) {
        const double v = x->features[static_cast<std::size_t>(p * ci + c)];
        sum(c) += v;
        sum_sq(c) += v * v;
      }
    }
  }
  const double count = static_cast<double>(order.size() * kProbePositions);
  for (int c = 0; c < ci; ++c) {
    const double mean = sum(c) / count;
    const double var = std::max(sum_sq(c) / count - mean * mean, 0.0);
    model.feature_mean(c) = mean;
    model.feature_scale(c) = var > 1e-24 ? 1.0 / std::sqrt(var) : 1.0;
  }
  model.initialize(cfg.seed);

  std::vector<double> params = model.parameters(), grad;
  std::vector<double> m1(params.size(), 0.0), m2(params.size(), 0.0);
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  double beta1_t = 1, beta2_t = 1;
  Rng shuffler(derive_seed(cfg.seed, "probe-shuffle"));

  TrainResult result;
  result.best_validation_accuracy = -1;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffler.shuffle(order);
    double epoch_loss = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t len = std::min(static_cast<std::size_t>(cfg.batch_size), order.size() - start);
      const double l = model.loss(std::span<const ProbeExample *const>(order.data() + start, len), &grad);
      if (!std::isfinite(l)) throw TrainingError("non-finite loss in epoch " + std::to_string(epoch), epoch);
      epoch_loss += l * static_cast<double>(len);
      beta1_t *= beta1;
      beta2_t *= beta2;
      for (std::size_t i = 0; i < params.size(); ++i) {
        m1[i] = beta1 * m1[i] + (1 - beta1) * grad[i];
        m2[i] = beta2 * m2[i] + (1 - beta2) * grad[i] * grad[i];
        const double mh = m1[i] / (1 - beta1_t), vh = m2[i] / (1 - beta2_t);
        params[i] -= cfg.learning_rate * mh / (std::sqrt(vh) + eps);
      }
      model.set_parameters(params);
    }
    EpochLog log{epoch, epoch_loss / static_cast<double>(order.size()), 0};
    if (!validation.empty()) log.validation_accuracy = evaluate(model, validation).accuracy;
    result.history.push_back(log);
    const bool better = validation.empty() ? true : log.validation_accuracy > result.best_validation_accuracy;
    if (better) {
      result.model = model;
      result.best_epoch = epoch;
      result.best_validation_accuracy = log.validation_accuracy;
    }
  }
  return result;
}

double gradient_check(const ProbeModel &model, const ProbeExample &example, double epsilon) {
  if (!(epsilon >= 1e-6 && epsilon <= 1e-3)) throw DomainError("gradient_check: epsilon outside [1e-6, 1e-3]");
  const ProbeExample *p = &example;
  const std::span<const ProbeExample *const> batch(&p, 1);
  std::vector<double> analytic;
  model.loss(batch, &analytic);
  ProbeModel probe = model;
  std::vector<double> params = model.parameters();
  double worst = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + epsilon;
    probe.set_parameters(params);
    const double up = probe.loss(batch);
    params[i] = saved - epsilon;
    probe.set_parameters(params);
    const double down = probe.loss(batch);
    params[i] = saved;
    const double numeric = (up - down) / (2 * epsilon);
    const double err =
        std::abs(analytic[i] - numeric) / std::max({std::abs(analytic[i]), std::abs(numeric), 1e-6});
    worst = std::max(worst, err);
  }
  return worst;
}

namespace {

constexpr std::string_view kCheckpointMagic{"APZPRB1\n", 8};

void put_floats(std::string &out, const std::vector<double> &values) {
  for (double v : values) {
    const float f = static_cast<float>(v);
    char b[4];
    std::memcpy(b, &f, 4);
    out.append(b, 4);
  }
}

} // namespace

void write_checkpoint(const ProbeModel &model, const CheckpointInfo &info, const std::filesystem::path &path) {
  const auto &a = model.architecture();
  const nlohmann::ordered_json header = {
      {"schema", 1},
      {"in_channels", a.in_channels},
      {"conv_channels", a.conv_channels},
      {"kernel", a.kernel},
      {"positions", a.positions},
      {"hidden1", a.hidden1},
      {"hidden2", a.hidden2},
      {"parameter_count", a.parameter_count()},
      {"seed", info.seed},
      {"epochs", info.epochs},
      {"batch_size", info.batch_size},
      {"learning_rate", info.learning_rate},
      {"layers", info.layers},
      {"best_epoch", info.best_epoch},
  };
  const std::string text = header.dump();
  std::string out(kCheckpointMagic);
  const auto len = static_cast<std::uint32_t>(text.size());
  char b[4];
  std::memcpy(b, &len, 4);
  out.append(b, 4);
  out += text;
  put_floats(out, model.parameters());
  put_floats(out, std::vector<double>(model.feature_mean.data(), model.feature_mean.data() + model.feature_mean.size()));
  put_floats(out,
             std::vector<double>(model.feature_scale.data(), model.feature_scale.data() + model.feature_scale.size()));
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

ProbeModel read_checkpoint(const std::filesystem::path &path, CheckpointInfo *info) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  const std::string bytes = ss.str();
  if (bytes.size() < 12 || std::string_view(bytes).substr(0, 8) != kCheckpointMagic) {
    throw FormatError("not a probe checkpoint", 0);
  }
  std::uint32_t len;
  std::memcpy(&len, bytes.data() + 8, 4);
  if (bytes.size() < 12 + std::size_t{len}) throw FormatError("truncated checkpoint header", bytes.size());
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(bytes.substr(12, len));
  } catch (const nlohmann::json::exception &e) {
    throw FormatError(std::string("bad checkpoint header: ") + e.what(), 12);
  }
  ProbeArchitecture a;
  a.in_channels = h.at("in_channels");
  a.conv_channels = h.at("conv_channels");
  a.kernel = h.at("kernel");
  a.positions = h.at("positions");
  a.hidden1 = h.at("hidden1");
  a.hidden2 = h.at("hidden2");
  ProbeModel model(a);
  const std::size_t np = a.parameter_count(), nc = static_cast<std::size_t>(a.in_channels);
  const std::size_t payload = (np + 2 * nc) * 4;
  const std::size_t offset = 12 + len;
  if (bytes.size() - offset != payload) {
    throw FormatError("checkpoint payload: expected " + std::to_string(payload) + " bytes, got " +
                          std::to_string(bytes.size() - offset),
                      offset);
  }
  std::vector<double> values(np + 2 * nc);
  for (std::size_t i = 0; i < values.size(); ++i) {
    float v;
    std::memcpy(&v, bytes.data() + offset + 4 * i, 4);
    values[i] = v;
  }
  model.set_parameters(std::span<const double>(values.data(), np));
  for (std::size_t c = 0; c < nc; ++c) {
    model.feature_mean(static_cast<Eigen::Index>(c)) = values[np + c];
    model.feature_scale(static_cast<Eigen::Index>(c)) = values[np + nc + c];
  }
  if (info) {
    info->seed = h.at("seed");
    info->epochs = h.at("epochs");
    info->batch_size = h.at("batch_size");
    info->learning_rate = h.at("learning_rate");
    info->layers = h.at("layers").get<std::vector<int>>();
    info->best_epoch = h.at("best_epoch");
  }
  return model;
}

} // namespace apz
