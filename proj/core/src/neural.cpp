#include "rjm/neural.hpp"

#include <spdlog/spdlog.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "rjm/error.hpp"
#include "rjm/rng.hpp"

namespace rjm {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;
using MapVec = Eigen::Map<Vec>;
using ConstMapVec = Eigen::Map<const Vec>;

Vec softmax(const Vec& logits) {
  Vec p = (logits.array() - logits.maxCoeff()).exp();
  return p / p.sum();
}

std::string_view kind_name(NeuralKind k) { return k == NeuralKind::cnn ? "cnn" : "recurrent"; }

}  // namespace

NeuralModel::Layout NeuralModel::layout() const {
  Layout l;
  const std::size_t K = static_cast<std::size_t>(classes_);
  const std::size_t D = params_.step_width;
  std::size_t at = 0;
  if (kind_ == NeuralKind::cnn) {
    const std::size_t F = params_.filters;
    const std::size_t L = params_.steps - params_.kernel + 1;
    const std::size_t P = L / params_.pool;
    l.conv_w = at;
    at += F * params_.kernel * D;
    l.conv_b = at;
    at += F;
    l.dense_in = P * F + side_width_;
  } else {
    const std::size_t H = params_.hidden;
    l.wx = at;
    at += 4 * H * D;
    l.wh = at;
    at += 4 * H * H;
    l.gate_b = at;
    at += 4 * H;
    l.dense_in = H + side_width_;
  }
  l.dense_w = at;
  at += K * l.dense_in;
  l.dense_b = at;
  at += K;
  l.total = at;
  return l;
}

std::vector<bool> NeuralModel::weight_mask() const {
  const Layout l = layout();
  std::vector<bool> mask(l.total, false);
  auto mark = [&](std::size_t from, std::size_t to) { std::fill(mask.begin() + static_cast<std::ptrdiff_t>(from), mask.begin() + static_cast<std::ptrdiff_t>(to), true); };
  if (kind_ == NeuralKind::cnn) {
    mark(l.conv_w, l.conv_b);
  } else {
    mark(l.wx, l.gate_b);
  }
  mark(l.dense_w, l.dense_b);
  return mask;
}

NeuralModel::NeuralModel(NeuralKind kind, NeuralParams params, int classes, std::size_t side_width)
    : kind_(kind), params_(params), classes_(classes), side_width_(side_width) {
  if (classes_ < 2) throw ConfigError("neural: need at least two classes");
  if (params_.steps == 0 || params_.step_width == 0) throw ConfigError("neural: empty input grid");
  if (kind_ == NeuralKind::cnn) {
    if (params_.kernel < 1 || params_.kernel > params_.steps || params_.filters < 1 || params_.pool < 1 ||
        (params_.steps - params_.kernel + 1) / params_.pool == 0) {
      throw ConfigError("neural: convolution shape does not fit the input grid");
    }
  } else if (params_.hidden < 1) {
    throw ConfigError("neural: hidden size must be >= 1");
  }
  side_mean.assign(side_width_, 0.0);
  side_scale.assign(side_width_, 1.0);
  side_columns.resize(side_width_);
  for (std::size_t i = 0; i < side_width_; ++i) side_columns[i] = i;

  const Layout l = layout();
  theta_.assign(l.total, 0.0);
  Rng rng(params_.seed);
  auto xavier = [&](std::size_t offset, std::size_t count, std::size_t fan_in, std::size_t fan_out) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (std::size_t i = 0; i < count; ++i) theta_[offset + i] = rng.uniform(-a, a);
  };
  const std::size_t K = static_cast<std::size_t>(classes_);
  const std::size_t D = params_.step_width;
  if (kind_ == NeuralKind::cnn) {
    xavier(l.conv_w, params_.filters * params_.kernel * D, params_.kernel * D, params_.filters);
  } else {
    const std::size_t H = params_.hidden;
    xavier(l.wx, 4 * H * D, D, H);
    xavier(l.wh, 4 * H * H, H, H);
    for (std::size_t j = 0; j < H; ++j) theta_[l.gate_b + H + j] = 1.0;  // forget gate bias
  }
  xavier(l.dense_w, K * l.dense_in, l.dense_in, K);
}

std::vector<double> NeuralModel::forward(std::span<const double> grid, std::span<const double> side) const {
  const NeuralExample ex{grid, side, 0};
  std::vector<double> p;
  run_batch(std::span(&ex, 1), false, nullptr, &p);
  return p;
}

double NeuralModel::loss_and_gradient(std::span<const NeuralExample> batch, std::vector<double>* gradient) const {
  return run_batch(batch, true, gradient, nullptr);
}

double NeuralModel::run_batch(std::span<const NeuralExample> batch, bool with_loss, std::vector<double>* gradient,
                              std::vector<double>* probabilities) const {
  if (batch.empty()) throw ArgumentError("neural: empty batch");
  const Layout l = layout();
  const std::size_t T = params_.steps;
  const std::size_t D = params_.step_width;
  const auto B = static_cast<Eigen::Index>(batch.size());
  const auto K = static_cast<Eigen::Index>(classes_);
  const auto Din = static_cast<Eigen::Index>(l.dense_in);
  const auto Dd = static_cast<Eigen::Index>(D);
  const auto core = static_cast<Eigen::Index>(l.dense_in - side_width_);
  for (const auto& ex : batch) {
    if (ex.grid.size() != T * D) throw ShapeError("neural: grid has " + std::to_string(ex.grid.size()) + " values");
    if (ex.side.size() != side_width_) throw ShapeError("neural: side input width mismatch");
    if (with_loss && (ex.label < 0 || ex.label >= classes_)) throw LabelError("neural: label out of range");
  }
  if (gradient) gradient->assign(l.total, 0.0);

  // Dense-layer input, one row per example.
  RowMat u(B, Din);
  for (Eigen::Index b = 0; b < B; ++b) {
    const auto& side = batch[static_cast<std::size_t>(b)].side;
    for (std::size_t s = 0; s < side_width_; ++s) {
      u(b, core + static_cast<Eigen::Index>(s)) = (side[s] - side_mean[s]) / side_scale[s];
    }
  }

  // CNN caches
  const std::size_t F = params_.filters, W = params_.kernel, L = T >= W ? T - W + 1 : 0;
  const std::size_t P = params_.pool ? L / params_.pool : 0;
  std::vector<RowMat> conv;
  std::vector<std::vector<Eigen::Index>> winner;
  // LSTM caches
  const auto Hh = static_cast<Eigen::Index>(params_.hidden);
  std::vector<RowMat> xs, hs, cs, acts;

  if (kind_ == NeuralKind::cnn) {
    ConstMapMat wc(theta_.data() + l.conv_w, static_cast<Eigen::Index>(F), static_cast<Eigen::Index>(W * D));
    ConstMapVec bc(theta_.data() + l.conv_b, static_cast<Eigen::Index>(F));
    conv.resize(batch.size());
    winner.resize(batch.size());
    for (Eigen::Index b = 0; b < B; ++b) {
      const auto& ex = batch[static_cast<std::size_t>(b)];
      // im2col as a strided view: row r covers grid rows r .. r+W-1.
      Eigen::Map<const RowMat, 0, Eigen::OuterStride<>> cols(ex.grid.data(), static_cast<Eigen::Index>(L),
                                                             static_cast<Eigen::Index>(W * D), Eigen::OuterStride<>(Dd));
      RowMat& a = conv[static_cast<std::size_t>(b)];
      a = cols * wc.transpose();
      a.rowwise() += bc.transpose();
      auto& win = winner[static_cast<std::size_t>(b)];
      win.resize(P * F);
      for (std::size_t p = 0; p < P; ++p)
        for (std::size_t f = 0; f < F; ++f) {
          const auto fi = static_cast<Eigen::Index>(f);
          auto best = static_cast<Eigen::Index>(p * params_.pool);
          for (std::size_t q = 1; q < params_.pool; ++q) {
            const auto r = static_cast<Eigen::Index>(p * params_.pool + q);
            if (a(r, fi) > a(best, fi)) best = r;
          }
          win[p * F + f] = best;
          u(b, static_cast<Eigen::Index>(p * F + f)) = std::max(0.0, a(best, fi));
        }
    }
  } else {
    ConstMapMat wx(theta_.data() + l.wx, 4 * Hh, Dd);
    ConstMapMat wh(theta_.data() + l.wh, 4 * Hh, Hh);
    ConstMapVec bias(theta_.data() + l.gate_b, 4 * Hh);
    // Step t reads grid row T-1-t: the personal slots first, the most recent
    // experience last.
    xs.assign(T, RowMat(B, Dd));
    for (std::size_t t = 0; t < T; ++t)
      for (Eigen::Index b = 0; b < B; ++b)
        xs[t].row(b) = ConstMapVec(batch[static_cast<std::size_t>(b)].grid.data() + (T - 1 - t) * D, Dd).transpose();
    hs.assign(T + 1, RowMat::Zero(B, Hh));
    cs.assign(T + 1, RowMat::Zero(B, Hh));
    acts.resize(T);
    for (std::size_t t = 0; t < T; ++t) {
      RowMat z = xs[t] * wx.transpose();
      z.noalias() += hs[t] * wh.transpose();
      z.rowwise() += bias.transpose();
      RowMat& act = acts[t];
      act.resize(B, 4 * Hh);
      act.leftCols(2 * Hh) = (1.0 + (-z.leftCols(2 * Hh).array()).exp()).inverse();
      act.middleCols(2 * Hh, Hh) = z.middleCols(2 * Hh, Hh).array().tanh();
      act.rightCols(Hh) = (1.0 + (-z.rightCols(Hh).array()).exp()).inverse();
      cs[t + 1] = act.middleCols(Hh, Hh).cwiseProduct(cs[t]) + act.leftCols(Hh).cwiseProduct(act.middleCols(2 * Hh, Hh));
      hs[t + 1] = act.rightCols(Hh).array() * cs[t + 1].array().tanh();
    }
    u.leftCols(Hh) = hs[T];
  }

  ConstMapMat wd(theta_.data() + l.dense_w, K, Din);
  ConstMapVec bd(theta_.data() + l.dense_b, K);
  RowMat prob = u * wd.transpose();
  prob.rowwise() += bd.transpose();
  for (Eigen::Index b = 0; b < B; ++b) {
    prob.row(b) = softmax(prob.row(b).transpose()).transpose();
  }
  if (probabilities) probabilities->assign(prob.data(), prob.data() + prob.size());
  if (!with_loss) return 0.0;

  double loss = 0.0;
  for (Eigen::Index b = 0; b < B; ++b) {
    loss -= std::log(std::max(prob(b, batch[static_cast<std::size_t>(b)].label), 1e-300));
  }
  loss /= static_cast<double>(B);
  if (!gradient) return loss;

  RowMat dlogit = prob;
  for (Eigen::Index b = 0; b < B; ++b) dlogit(b, batch[static_cast<std::size_t>(b)].label) -= 1.0;
  dlogit /= static_cast<double>(B);
  MapMat(gradient->data() + l.dense_w, K, Din).noalias() += dlogit.transpose() * u;
  MapVec(gradient->data() + l.dense_b, K) += dlogit.colwise().sum().transpose();
  const RowMat du = dlogit * wd;

  if (kind_ == NeuralKind::cnn) {
    MapMat gwc(gradient->data() + l.conv_w, static_cast<Eigen::Index>(F), static_cast<Eigen::Index>(W * D));
    MapVec gbc(gradient->data() + l.conv_b, static_cast<Eigen::Index>(F));
    for (Eigen::Index b = 0; b < B; ++b) {
      const auto& ex = batch[static_cast<std::size_t>(b)];
      Eigen::Map<const RowMat, 0, Eigen::OuterStride<>> cols(ex.grid.data(), static_cast<Eigen::Index>(L),
                                                             static_cast<Eigen::Index>(W * D), Eigen::OuterStride<>(Dd));
      const RowMat& a = conv[static_cast<std::size_t>(b)];
      const auto& win = winner[static_cast<std::size_t>(b)];
      RowMat da = RowMat::Zero(a.rows(), a.cols());
      for (std::size_t p = 0; p < P; ++p)
        for (std::size_t f = 0; f < F; ++f) {
          const auto fi = static_cast<Eigen::Index>(f);
          const Eigen::Index r = win[p * F + f];
          if (a(r, fi) > 0.0) da(r, fi) += du(b, static_cast<Eigen::Index>(p * F + f));
        }
      gwc.noalias() += da.transpose() * cols;
      gbc += da.colwise().sum().transpose();
    }
  } else {
    ConstMapMat wh(theta_.data() + l.wh, 4 * Hh, Hh);
    MapMat gwx(gradient->data() + l.wx, 4 * Hh, Dd);
    MapMat gwh(gradient->data() + l.wh, 4 * Hh, Hh);
    MapVec gb(gradient->data() + l.gate_b, 4 * Hh);
    RowMat dh = du.leftCols(Hh);
    RowMat dc = RowMat::Zero(B, Hh);
    RowMat dz(B, 4 * Hh);
    for (std::size_t t = T; t-- > 0;) {
      const RowMat& act = acts[t];
      const auto i = act.leftCols(Hh).array();
      const auto f = act.middleCols(Hh, Hh).array();
      const auto g = act.middleCols(2 * Hh, Hh).array();
      const auto o = act.rightCols(Hh).array();
      const Eigen::ArrayXXd tc = cs[t + 1].array().tanh();
      dc.array() += dh.array() * o * (1.0 - tc * tc);
      dz.leftCols(Hh) = (dc.array() * g * i * (1.0 - i)).matrix();
      dz.middleCols(Hh, Hh) = (dc.array() * cs[t].array() * f * (1.0 - f)).matrix();
      dz.middleCols(2 * Hh, Hh) = (dc.array() * i * (1.0 - g * g)).matrix();
      dz.rightCols(Hh) = (dh.array() * tc * o * (1.0 - o)).matrix();
      gwx.noalias() += dz.transpose() * xs[t];
      gwh.noalias() += dz.transpose() * hs[t];
      gb += dz.colwise().sum().transpose();
      dh.noalias() = dz * wh;
      dc.array() *= f;
    }
  }
  return loss;
}

std::vector<double> NeuralModel::predict_row(std::span<const double> row) const {
  const std::size_t width = params_.steps * params_.step_width;
  if (row.size() < grid_offset + width) throw ShapeError("neural: feature row too short");
  if (side_columns.size() != side_width_) throw ShapeError("neural: side column map does not match side width");
  std::vector<double> side(side_width_);
  for (std::size_t i = 0; i < side_width_; ++i) {
    if (side_columns[i] >= row.size()) throw ShapeError("neural: feature row too short");
    side[i] = row[side_columns[i]];
  }
  return forward(row.subspan(grid_offset, width), side);
}

nlohmann::json NeuralModel::to_json() const {
  return {{"kind", kind_name(kind_)},
          {"classes", classes_},
          {"layout_version", layout_version()},
          {"side_width", side_width_},
          {"side_columns", side_columns},
          {"grid_offset", grid_offset},
          {"params",
           {{"epochs", params_.epochs},
            {"batch_size", params_.batch_size},
            {"learning_rate", params_.learning_rate},
            {"momentum", params_.momentum},
            {"clip_norm", params_.clip_norm},
            {"weight_decay", params_.weight_decay},
            {"seed", params_.seed},
            {"steps", params_.steps},
            {"step_width", params_.step_width},
            {"filters", params_.filters},
            {"kernel", params_.kernel},
            {"pool", params_.pool},
            {"hidden", params_.hidden},
            {"side_path", params_.side_path}}},
          {"side_mean", side_mean},
          {"side_scale", side_scale},
          {"epoch_loss", epoch_loss},
          {"aborted", aborted},
          {"weights", theta_}};
}

NeuralModel NeuralModel::from_json(const nlohmann::json& j) {
  NeuralParams p;
  const auto& jp = j.at("params");
  p.epochs = jp.at("epochs").get<std::size_t>();
  p.batch_size = jp.at("batch_size").get<std::size_t>();
  p.learning_rate = jp.at("learning_rate").get<double>();
  p.momentum = jp.at("momentum").get<double>();
  p.clip_norm = jp.at("clip_norm").get<double>();
  p.weight_decay = jp.at("weight_decay").get<double>();
  p.seed = jp.at("seed").get<std::uint64_t>();
  p.steps = jp.at("steps").get<std::size_t>();
  p.step_width = jp.at("step_width").get<std::size_t>();
  p.filters = jp.at("filters").get<std::size_t>();
  p.kernel = jp.at("kernel").get<std::size_t>();
  p.pool = jp.at("pool").get<std::size_t>();
  p.hidden = jp.at("hidden").get<std::size_t>();
  p.side_path = jp.at("side_path").get<bool>();
  const auto kind = j.at("kind").get<std::string>() == "cnn" ? NeuralKind::cnn : NeuralKind::recurrent;
  NeuralModel m(kind, p, j.at("classes").get<int>(), j.at("side_width").get<std::size_t>());
  m.set_layout_version(j.at("layout_version").get<int>());
  m.grid_offset = j.at("grid_offset").get<std::size_t>();
  m.side_columns = j.at("side_columns").get<std::vector<std::size_t>>();
  m.side_mean = j.at("side_mean").get<std::vector<double>>();
  m.side_scale = j.at("side_scale").get<std::vector<double>>();
  m.epoch_loss = j.at("epoch_loss").get<std::vector<double>>();
  m.aborted = j.at("aborted").get<bool>();
  auto weights = j.at("weights").get<std::vector<double>>();
  if (weights.size() != m.theta_.size()) throw StaleArtifactError("train", "neural artifact: weight count mismatch");
  m.theta_ = std::move(weights);
  return m;
}

NeuralModel train_neural(NeuralKind kind, const Matrix& grids, const Matrix* side, std::span<const int> y, int classes,
                         const NeuralParams& params) {
  if (grids.rows == 0 || grids.rows != y.size()) throw ArgumentError("neural: need |X| = |y| > 0");
  if (grids.cols != params.steps * params.step_width) throw ShapeError("neural: grid width does not match steps x step_width");
  const bool use_side = params.side_path && side != nullptr;
  if (use_side && side->rows != grids.rows) throw ShapeError("neural: side matrix row count mismatch");
  NeuralModel model(kind, params, classes, use_side ? side->cols : 0);

  if (use_side) {
    for (std::size_t j = 0; j < side->cols; ++j) {
      double mean = 0.0, sq = 0.0;
      for (std::size_t i = 0; i < side->rows; ++i) mean += (*side)(i, j);
      mean /= static_cast<double>(side->rows);
      for (std::size_t i = 0; i < side->rows; ++i) sq += ((*side)(i, j) - mean) * ((*side)(i, j) - mean);
      const double sd = std::sqrt(sq / static_cast<double>(side->rows));
      model.side_mean[j] = mean;
      model.side_scale[j] = sd > 1e-12 ? sd : 1.0;
    }
  }

  std::vector<NeuralExample> examples(grids.rows);
  for (std::size_t i = 0; i < grids.rows; ++i) {
    examples[i] = {grids.row(i), use_side ? side->row(i) : std::span<const double>{}, y[i]};
  }
  Rng rng(derive_seed(params.seed, 0x5EED));
  std::vector<std::size_t> order(grids.rows);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> velocity(model.parameters().size(), 0.0);
  std::vector<double> gradient;
  std::vector<NeuralExample> batch;
  const std::size_t bs = std::max<std::size_t>(1, params.batch_size);
  std::vector<double> last_good = model.parameters();
  const auto decays = model.weight_mask();

  for (std::size_t epoch = 0; epoch < params.epochs && !model.aborted; ++epoch) {
    rng.shuffle(std::span(order));
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      batch.clear();
      for (std::size_t i = start; i < std::min(order.size(), start + bs); ++i) batch.push_back(examples[order[i]]);
      const double loss = model.loss_and_gradient(batch, &gradient);
      if (!std::isfinite(loss)) {
        spdlog::error("{} training: non-finite loss in epoch {}; keeping weights from epoch {}", kind_name(kind), epoch,
                      epoch == 0 ? 0 : epoch - 1);
        model.parameters() = last_good;
        model.aborted = true;
        break;
      }
      total += loss * static_cast<double>(batch.size());
      if (params.clip_norm > 0.0) {
        double norm = 0.0;
        for (double g : gradient) norm += g * g;
        norm = std::sqrt(norm);
        if (norm > params.clip_norm) {
          for (auto& g : gradient) g *= params.clip_norm / norm;
        }
      }
      auto& theta = model.parameters();
      for (std::size_t k = 0; k < theta.size(); ++k) {
        const double g = gradient[k] + (decays[k] ? params.weight_decay * theta[k] : 0.0);
        velocity[k] = params.momentum * velocity[k] - params.learning_rate * g;
        theta[k] += velocity[k];
      }
    }
    if (!model.aborted) {
      model.epoch_loss.push_back(total / static_cast<double>(order.size()));
      last_good = model.parameters();
    }
  }
  return model;
}

}  // namespace rjm
