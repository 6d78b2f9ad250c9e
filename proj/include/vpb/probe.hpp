#pragma once

// Multinomial logistic regression trained with L-BFGS.
//
// Objective over parameters theta = (W: C x D, b: C):
//   L = -(1/N) sum_i log softmax(W x_i + b)[y_i] + (lambda/2) ||W||_F^2
// All arithmetic is float64 with a fixed reduction order, so training is
// bit-deterministic for fixed inputs.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "vpb/embedding.hpp"
#include "vpb/error.hpp"

namespace vpb {

/// Dense row-major float64 matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  static Matrix zeros(std::size_t r, std::size_t c) { return {r, c, std::vector<double>(r * c, 0.0)}; }
  std::span<const double> row(std::size_t i) const { return std::span<const double>(data).subspan(i * cols, cols); }
  std::span<double> row(std::size_t i) { return std::span<double>(data).subspan(i * cols, cols); }
  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  friend bool operator==(const Matrix&, const Matrix&) = default;
};

inline Matrix to_matrix(const EmbeddingSet& set) {
  Matrix m{set.count(), set.dim(), {}};
  m.data.assign(set.matrix.begin(), set.matrix.end());
  return m;
}

struct ProbeModel {
  Matrix W;               // C x D
  std::vector<double> b;  // C
  double lambda = 0.0;
  bool converged = false;
  double final_grad_norm = 0.0;
  std::size_t iterations = 0;
  std::string diagnostic;  // set when training stopped early

  std::size_t num_classes() const { return W.rows; }
  std::size_t dim() const { return W.cols; }
};

struct LbfgsOptions {
  std::size_t memory = 10;
  std::size_t max_iters = 500;
  double grad_tol = 1e-6;
  double c1 = 1e-4;
  double c2 = 0.9;
  std::size_t max_line_search_evals = 50;

  void check() const {
    if (memory < 1) throw Error(ErrorCode::InvalidConfig, "lbfgs memory must be >= 1");
    if (!(grad_tol > 0.0)) throw Error(ErrorCode::InvalidConfig, "grad_tol must be > 0");
    if (!(c1 > 0.0 && c1 < c2 && c2 < 1.0)) throw Error(ErrorCode::InvalidConfig, "need 0 < c1 < c2 < 1");
  }
};

inline constexpr double kDefaultLambda = 1e-4;

namespace detail {

inline void check_probe_shapes(std::size_t C, std::size_t D, const Matrix& X, std::span<const std::uint32_t> y) {
  if (X.cols != D) {
    throw Error(ErrorCode::ShapeMismatch, "feature dim " + std::to_string(X.cols) + " != model dim " + std::to_string(D));
  }
  if (X.data.size() != X.rows * X.cols) throw Error(ErrorCode::ShapeMismatch, "matrix storage != rows * cols");
  if (y.size() != X.rows) throw Error(ErrorCode::ShapeMismatch, "label count != row count");
  if (X.rows == 0) throw Error(ErrorCode::ShapeMismatch, "no samples");
  for (auto label : y) {
    if (label >= C) throw Error(ErrorCode::ShapeMismatch, "label " + std::to_string(label) + " >= C");
  }
}

/// Loss and gradient in the flat parameter layout [W row-major | b].
inline double loss_and_grad_flat(std::span<const double> theta, std::size_t C, std::size_t D, const Matrix& X,
                                 std::span<const std::uint32_t> y, double lambda, std::span<double> grad) {
  const double* W = theta.data();
  const double* b = theta.data() + C * D;
  std::fill(grad.begin(), grad.end(), 0.0);
  double* gW = grad.data();
  double* gb = grad.data() + C * D;

  std::vector<double> z(C);
  double nll = 0.0;
  for (std::size_t i = 0; i < X.rows; ++i) {
    const auto x = X.row(i);
    double zmax = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < C; ++c) {
      double s = b[c];
      const double* w = W + c * D;
      for (std::size_t d = 0; d < D; ++d) s += w[d] * x[d];
      z[c] = s;
      zmax = std::max(zmax, s);
    }
    double sum = 0.0;
    for (std::size_t c = 0; c < C; ++c) sum += std::exp(z[c] - zmax);
    const double lse = zmax + std::log(sum);
    nll += lse - z[y[i]];
    for (std::size_t c = 0; c < C; ++c) {
      const double r = std::exp(z[c] - lse) - (c == y[i] ? 1.0 : 0.0);
      double* g = gW + c * D;
      for (std::size_t d = 0; d < D; ++d) g[d] += r * x[d];
      gb[c] += r;
    }
  }
  const double inv_n = 1.0 / static_cast<double>(X.rows);
  double reg = 0.0;
  for (std::size_t k = 0; k < C * D; ++k) {
    reg += W[k] * W[k];
    gW[k] = gW[k] * inv_n + lambda * W[k];
  }
  for (std::size_t c = 0; c < C; ++c) gb[c] *= inv_n;
  return nll * inv_n + 0.5 * lambda * reg;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double inf_norm(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

/// Minimiser of the cubic matching (a, fa, da) and (b, fb, db), or NaN.
inline double cubic_min(double a, double fa, double da, double b, double fb, double db) {
  const double d1 = da + db - 3.0 * (fa - fb) / (a - b);
  const double disc = d1 * d1 - da * db;
  if (!(disc >= 0.0)) return std::numeric_limits<double>::quiet_NaN();
  const double d2 = std::copysign(std::sqrt(disc), b - a);
  const double denom = db - da + 2.0 * d2;
  if (denom == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return b - (b - a) * (db + d2 - d1) / denom;
}

struct LinePoint {
  double step = 0.0;
  double f = 0.0;
  double d = 0.0;  // directional derivative
  std::vector<double> x;
  std::vector<double> g;
};

/// Strong-Wolfe line search (bracketing phase followed by zoom).
/// Returns false when no acceptable step was found.
template <typename Eval>
bool strong_wolfe(Eval&& eval, std::span<const double> x0, double f0, double d0, std::span<const double> p,
                  double step0, const LbfgsOptions& opt, LinePoint& out) {
  const std::size_t n = x0.size();
  std::size_t evals = 0;
  const auto at = [&](double step) {
    LinePoint pt;
    pt.step = step;
    pt.x.resize(n);
    pt.g.resize(n);
    for (std::size_t i = 0; i < n; ++i) pt.x[i] = x0[i] + step * p[i];
    pt.f = eval(pt.x, pt.g);
    pt.d = dot(pt.g, p);
    ++evals;
    return pt;
  };
  const auto armijo_fails = [&](const LinePoint& pt) { return !(pt.f <= f0 + opt.c1 * pt.step * d0); };
  const auto curvature_ok = [&](const LinePoint& pt) { return std::abs(pt.d) <= -opt.c2 * d0; };

  const auto zoom = [&](LinePoint lo, LinePoint hi) {
    while (evals < opt.max_line_search_evals) {
      const double a = std::min(lo.step, hi.step);
      const double b = std::max(lo.step, hi.step);
      const double width = b - a;
      if (width <= 1e-16 * std::max(1.0, b)) return false;
      double t = cubic_min(lo.step, lo.f, lo.d, hi.step, hi.f, hi.d);
      if (!std::isfinite(t) || t < a + 0.1 * width || t > b - 0.1 * width) t = 0.5 * (a + b);
      LinePoint pt = at(t);
      if (armijo_fails(pt) || pt.f >= lo.f) {
        hi = std::move(pt);
      } else {
        if (curvature_ok(pt)) {
          out = std::move(pt);
          return true;
        }
        if (pt.d * (hi.step - lo.step) >= 0.0) hi = lo;
        lo = std::move(pt);
      }
    }
    return false;
  };

  LinePoint prev;
  prev.step = 0.0;
  prev.f = f0;
  prev.d = d0;
  prev.x.assign(x0.begin(), x0.end());
  double step = step0;
  for (int i = 0; evals < opt.max_line_search_evals; ++i) {
    LinePoint pt = at(step);
    if (!std::isfinite(pt.f)) {
      step *= 0.5;
      continue;
    }
    if (armijo_fails(pt) || (i > 0 && pt.f >= prev.f)) return zoom(std::move(prev), std::move(pt));
    if (curvature_ok(pt)) {
      out = std::move(pt);
      return true;
    }
    if (pt.d >= 0.0) return zoom(std::move(pt), std::move(prev));
    prev = std::move(pt);
    step *= 2.0;
  }
  return false;
}

}  // namespace detail

/// Loss and gradient at (W, b). grad_W has W's shape; grad_b has C entries.
struct LossGrad {
  double loss = 0.0;
  Matrix grad_W;
  std::vector<double> grad_b;
};

inline LossGrad loss_and_grad(const Matrix& W, std::span<const double> b, const Matrix& X,
                              std::span<const std::uint32_t> y, double lambda) {
  const std::size_t C = W.rows, D = W.cols;
  if (b.size() != C) throw Error(ErrorCode::ShapeMismatch, "bias length != C");
  detail::check_probe_shapes(C, D, X, y);
  std::vector<double> theta(W.data);
  theta.insert(theta.end(), b.begin(), b.end());
  std::vector<double> grad(theta.size());
  LossGrad out;
  out.loss = detail::loss_and_grad_flat(theta, C, D, X, y, lambda, grad);
  out.grad_W = {C, D, std::vector<double>(grad.begin(), grad.begin() + C * D)};
  out.grad_b.assign(grad.begin() + C * D, grad.end());
  return out;
}

/// Loss after each accepted iterate, starting with the initial loss.
struct ProbeTrace {
  std::vector<double> losses;
};

/// Trains from W = 0, b = 0. Line-search failures end training early and are
/// reported through `converged == false` and `diagnostic`, not by throwing.
inline ProbeModel train_probe(const Matrix& X, std::span<const std::uint32_t> y, std::size_t num_classes,
                              double lambda = kDefaultLambda, const LbfgsOptions& opt = {},
                              ProbeTrace* trace = nullptr) {
  opt.check();
  const std::size_t C = num_classes, D = X.cols;
  if (C < 2) throw Error(ErrorCode::InvalidArgument, "need at least 2 classes");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw Error(ErrorCode::InvalidArgument, "lambda must be >= 0");
  detail::check_probe_shapes(C, D, X, y);
  if (X.rows < C) throw Error(ErrorCode::InvalidArgument, "need N >= C");

  const std::size_t n = C * D + C;
  const auto eval = [&](std::span<const double> th, std::span<double> g) {
    return detail::loss_and_grad_flat(th, C, D, X, y, lambda, g);
  };

  std::vector<double> x(n, 0.0), g(n);
  double f = eval(x, g);
  if (trace) trace->losses.push_back(f);

  std::deque<std::vector<double>> S, Y;
  std::deque<double> rho;
  std::vector<double> p(n), alpha_hist(opt.memory);

  ProbeModel model;
  model.lambda = lambda;
  std::size_t iter = 0;
  bool converged = detail::inf_norm(g) <= opt.grad_tol;
  while (!converged && iter < opt.max_iters) {
    // two-loop recursion: p = -H g
    std::vector<double> q(g);
    for (std::size_t k = S.size(); k-- > 0;) {
      alpha_hist[k] = rho[k] * detail::dot(S[k], q);
      for (std::size_t i = 0; i < n; ++i) q[i] -= alpha_hist[k] * Y[k][i];
    }
    double gamma = 1.0;
    if (!S.empty()) gamma = detail::dot(S.back(), Y.back()) / detail::dot(Y.back(), Y.back());
    for (std::size_t i = 0; i < n; ++i) q[i] *= gamma;
    for (std::size_t k = 0; k < S.size(); ++k) {
      const double beta = rho[k] * detail::dot(Y[k], q);
      for (std::size_t i = 0; i < n; ++i) q[i] += S[k][i] * (alpha_hist[k] - beta);
    }
    for (std::size_t i = 0; i < n; ++i) p[i] = -q[i];

    double d0 = detail::dot(g, p);
    if (!(d0 < 0.0)) {
      // not a descent direction; restart from steepest descent
      S.clear();
      Y.clear();
      rho.clear();
      for (std::size_t i = 0; i < n; ++i) p[i] = -g[i];
      d0 = detail::dot(g, p);
    }
    const double step0 = S.empty() ? std::min(1.0, 1.0 / std::sqrt(detail::dot(g, g))) : 1.0;

    detail::LinePoint next;
    if (!detail::strong_wolfe(eval, x, f, d0, p, step0, opt, next) || !(next.f < f)) {
      model.diagnostic = std::string(to_string(ErrorCode::LineSearchFailure)) + " at iteration " + std::to_string(iter);
      break;
    }

    std::vector<double> s(n), yv(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = next.x[i] - x[i];
      yv[i] = next.g[i] - g[i];
    }
    const double sy = detail::dot(s, yv);
    if (sy > 0.0) {
      if (S.size() == opt.memory) {
        S.pop_front();
        Y.pop_front();
        rho.pop_front();
      }
      S.push_back(std::move(s));
      Y.push_back(std::move(yv));
      rho.push_back(1.0 / sy);
    }
    x = std::move(next.x);
    g = std::move(next.g);
    f = next.f;
    ++iter;
    if (trace) trace->losses.push_back(f);
    converged = detail::inf_norm(g) <= opt.grad_tol;
  }

  model.W = {C, D, std::vector<double>(x.begin(), x.begin() + C * D)};
  model.b.assign(x.begin() + C * D, x.end());
  model.converged = converged;
  model.final_grad_norm = detail::inf_norm(g);
  model.iterations = iter;
  if (!converged && model.diagnostic.empty()) model.diagnostic = "max_iters reached";
  return model;
}

inline ProbeModel train_probe(const EmbeddingSet& train, double lambda = kDefaultLambda, const LbfgsOptions& opt = {}) {
  return train_probe(to_matrix(train), train.labels, train.meta.num_classes, lambda, opt);
}

/// argmax of W x + b; ties go to the smallest class index.
inline std::vector<std::uint32_t> predict(const ProbeModel& model, const Matrix& X) {
  if (X.cols != model.dim()) throw Error(ErrorCode::ShapeMismatch, "feature dim != model dim");
  std::vector<std::uint32_t> out(X.rows);
  for (std::size_t i = 0; i < X.rows; ++i) {
    const auto x = X.row(i);
    double best = -std::numeric_limits<double>::infinity();
    std::uint32_t arg = 0;
    for (std::size_t c = 0; c < model.num_classes(); ++c) {
      double s = model.b[c];
      const auto w = model.W.row(c);
      for (std::size_t d = 0; d < x.size(); ++d) s += w[d] * x[d];
      if (s > best) {
        best = s;
        arg = static_cast<std::uint32_t>(c);
      }
    }
    out[i] = arg;
  }
  return out;
}

inline double accuracy(std::span<const std::uint32_t> pred, std::span<const std::uint32_t> y) {
  if (pred.size() != y.size()) throw Error(ErrorCode::ShapeMismatch, "prediction count != label count");
  if (y.empty()) throw Error(ErrorCode::EmptyInput, "no labels");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < y.size(); ++i) hits += pred[i] == y[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(y.size());
}

inline double probe_accuracy(const ProbeModel& model, const EmbeddingSet& test) {
  return accuracy(predict(model, to_matrix(test)), test.labels);
}

// PRB1 blob: "PRB1" | u32 version | u32 C | u32 D | f64 W[C*D] | f64 b[C]
//            | f64 lambda | u8 converged | f64 final_grad_norm
namespace prb1 {
inline constexpr char kMagic[4] = {'P', 'R', 'B', '1'};
inline constexpr std::uint32_t kVersion = 1;
}  // namespace prb1

inline std::vector<std::uint8_t> encode_probe(const ProbeModel& m) {
  emb1::Writer w;
  const auto f64 = [&](double v) { w.u64(std::bit_cast<std::uint64_t>(v)); };
  w.raw(std::string_view(prb1::kMagic, 4));
  w.u32(prb1::kVersion);
  w.u32(static_cast<std::uint32_t>(m.num_classes()));
  w.u32(static_cast<std::uint32_t>(m.dim()));
  for (double v : m.W.data) f64(v);
  for (double v : m.b) f64(v);
  f64(m.lambda);
  w.bytes().push_back(m.converged ? 1 : 0);
  f64(m.final_grad_norm);
  return std::move(w.bytes());
}

inline ProbeModel decode_probe(std::span<const std::uint8_t> bytes) {
  emb1::Reader r(bytes);
  const auto magic = r.take(4, "magic");
  if (!std::equal(magic.begin(), magic.end(), prb1::kMagic)) throw Error(ErrorCode::FormatError, "bad PRB1 magic");
  if (r.u32("version") != prb1::kVersion) throw Error(ErrorCode::FormatError, "unsupported PRB1 version");
  const std::size_t C = r.u32("C"), D = r.u32("D");
  const auto f64 = [&](std::string_view what) { return std::bit_cast<double>(r.u64(what)); };
  ProbeModel m;
  m.W = Matrix::zeros(C, D);
  for (auto& v : m.W.data) v = f64("weights");
  m.b.resize(C);
  for (auto& v : m.b) v = f64("biases");
  m.lambda = f64("lambda");
  m.converged = r.take(1, "converged flag")[0] != 0;
  m.final_grad_norm = f64("final_grad_norm");
  if (r.remaining() != 0) throw Error(ErrorCode::FormatError, "trailing bytes after PRB1 payload");
  return m;
}

}  // namespace vpb
