#include "limelab/mars.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "limelab/common.hpp"

namespace limelab {
namespace mars {

FitConfig FitConfig::defaults_for(int p, int degree) {
  FitConfig cfg;
  // The budget must at least cover a full linear map (one pair per feature),
  // or locally linear targets in high dimension are unrepresentable.
  cfg.max_terms = std::max(21, 2 * p + 1);
  cfg.max_degree = degree;
  cfg.gcv_penalty = degree == 1 ? 2.0 : 3.0;
  cfg.minspan = -1;
  cfg.endspan = -1;
  return cfg;
}

double eval_basis(const BasisTerm& term, const Eigen::VectorXd& x) {
  for (Eigen::Index j = 0; j < x.size(); ++j)
    if (!std::isfinite(x[j])) throw Error("eval_basis: non-finite input");
  return term.eval(x);
}

double gcv_score(double rss, Eigen::Index n, double effective_params) {
  if (rss < 0.0) throw Error("gcv_score: rss must be non-negative");
  if (effective_params >= static_cast<double>(n))
    return std::numeric_limits<double>::infinity();
  const double denom = 1.0 - effective_params / static_cast<double>(n);
  return (rss / static_cast<double>(n)) / (denom * denom);
}

double effective_params_of(const std::vector<BasisTerm>& terms, double gcv_penalty) {
  std::vector<Hinge> distinct;
  for (const auto& term : terms)
    for (const auto& h : term.factors)
      if (std::find(distinct.begin(), distinct.end(), h) == distinct.end())
        distinct.push_back(h);
  return static_cast<double>(terms.size()) +
         gcv_penalty * static_cast<double>(distinct.size());
}

Eigen::VectorXd MarsModel::predict(const Eigen::MatrixXd& X) const {
  if (X.cols() != n_features)
    throw Error("MarsModel::predict: expected " + std::to_string(n_features) +
                " columns, got " + std::to_string(X.cols()));
  Eigen::VectorXd out = Eigen::VectorXd::Zero(X.rows());
  for (std::size_t q = 0; q < terms.size(); ++q) {
    const auto& term = terms[q];
    const double beta = coefficients[static_cast<Eigen::Index>(q)];
    if (term.is_intercept()) {
      out.array() += beta;
      continue;
    }
    for (Eigen::Index i = 0; i < X.rows(); ++i) out[i] += beta * term.eval_row(X, i);
  }
  return out;
}

double MarsModel::predict_one(const Eigen::VectorXd& x) const {
  if (x.size() != n_features)
    throw Error("MarsModel::predict_one: dimension mismatch");
  double out = 0.0;
  for (std::size_t q = 0; q < terms.size(); ++q)
    out += coefficients[static_cast<Eigen::Index>(q)] * terms[q].eval(x);
  return out;
}

std::string MarsModel::dump() const {
  std::ostringstream os;
  for (std::size_t q = 0; q < terms.size(); ++q) {
    const auto& term = terms[q];
    os << format_double(coefficients[static_cast<Eigen::Index>(q)]);
    for (const auto& h : term.factors) {
      const std::string var = "x" + std::to_string(h.feature);
      if (h.dir == HingeDir::plus)
        os << " * (" << var << " - " << format_double(h.knot) << ")+";
      else
        os << " * (" << format_double(h.knot) << " - " << var << ")+";
    }
    os << '\n';
  }
  return os.str();
}

namespace {

constexpr double kTiny = 1e-300;

void check_inputs(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                  const Eigen::VectorXd& w, const char* who) {
  if (X.rows() != y.size() || X.rows() != w.size())
    throw Error(std::string(who) + ": X, y, w row counts disagree");
  if (X.rows() < 2) throw Error(std::string(who) + ": need at least 2 rows");
  if (!X.allFinite() || !y.allFinite() || !w.allFinite())
    throw Error(std::string(who) + ": non-finite input");
  if (w.minCoeff() < 0.0) throw Error(std::string(who) + ": negative weight");
  if (w.sum() <= 0.0) throw Error(std::string(who) + ": weights sum to zero");
}

Eigen::VectorXd normalize_weights(const Eigen::VectorXd& w) {
  return w * (static_cast<double>(w.size()) / w.sum());
}

// Basis columns can span many orders of magnitude (degree-2 hinge products
// over wide balls), so the ridge floor scales with the largest Gram
// diagonal. Escalates when rounding still defeats the factorization.
double scaled_ridge(const Eigen::MatrixXd& gram_raw, int m, double base) {
  return base * std::max(1.0, gram_raw.topLeftCorner(m, m).diagonal().maxCoeff());
}

Eigen::LLT<Eigen::MatrixXd> ridged_llt(const Eigen::MatrixXd& gram_raw, double& lambda) {
  for (int attempt = 0; attempt < 4; ++attempt) {
    Eigen::MatrixXd G = gram_raw;
    G.diagonal().array() += lambda;
    Eigen::LLT<Eigen::MatrixXd> llt(G);
    if (llt.info() == Eigen::Success) return llt;
    lambda *= 1e3;
  }
  throw Error("mars: normal equations not positive definite despite ridge floor");
}

// Observations of one feature sorted by value descending, grouped by ties,
// with a flag marking knot-candidate groups.
struct FeatureOrder {
  std::vector<int> order;
  std::vector<std::pair<int, int>> groups;  // [begin, end) into `order`
  std::vector<char> is_candidate;
};

FeatureOrder build_feature_order(const Eigen::Ref<const Eigen::VectorXd>& xj,
                                 int knot_subsample) {
  const int n = static_cast<int>(xj.size());
  FeatureOrder fo;
  fo.order.resize(static_cast<std::size_t>(n));
  std::iota(fo.order.begin(), fo.order.end(), 0);
  std::sort(fo.order.begin(), fo.order.end(), [&](int a, int b) {
    if (xj[a] != xj[b]) return xj[a] > xj[b];
    return a < b;
  });
  int begin = 0;
  while (begin < n) {
    int end = begin + 1;
    while (end < n &&
           xj[fo.order[static_cast<std::size_t>(end)]] ==
               xj[fo.order[static_cast<std::size_t>(begin)]])
      ++end;
    fo.groups.emplace_back(begin, end);
    begin = end;
  }
  fo.is_candidate.assign(fo.groups.size(), 0);
  if (knot_subsample <= 0 || n <= knot_subsample) {
    std::fill(fo.is_candidate.begin(), fo.is_candidate.end(), 1);
  } else {
    // Evenly spaced positions over the sorted observations; mark the group
    // containing each picked position.
    std::vector<int> group_of(static_cast<std::size_t>(n));
    for (std::size_t g = 0; g < fo.groups.size(); ++g)
      for (int i = fo.groups[g].first; i < fo.groups[g].second; ++i)
        group_of[static_cast<std::size_t>(i)] = static_cast<int>(g);
    for (int s = 0; s < knot_subsample; ++s) {
      const double pos = static_cast<double>(s) * static_cast<double>(n - 1) /
                         static_cast<double>(knot_subsample - 1);
      fo.is_candidate[static_cast<std::size_t>(
          group_of[static_cast<std::size_t>(std::llround(pos))])] = 1;
    }
  }
  return fo;
}

using RowMajorMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Incremental weighted normal-equation state over the current basis matrix.
// G = B'WB + ridge*I is kept Cholesky-factored (G = L L'); candidate hinge
// pairs are scored by bordering L with the two new columns, which yields the
// exact refit RSS of the ridge-floored system without forming it.
class ForwardState {
 public:
  ForwardState(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
               const Eigen::VectorXd& wn, const FitConfig& cfg)
      : X_(X), y_(y), wn_(wn), cfg_(cfg), n_(X.rows()) {
    const int cap = std::max(cfg.max_terms, 1);
    B_.resize(n_, cap);
    Brm_.resize(n_, cap);
    G_.resize(cap, cap);
    c_.resize(cap);
    terms_.push_back(BasisTerm{});
    B_.col(0).setOnes();
    Brm_.col(0).setOnes();
    ywy_ = y_.dot((wn_.array() * y_.array()).matrix());
    m_ = 1;
    G_(0, 0) = wn_.sum();
    c_[0] = (wn_.array() * y_.array()).sum();
    refactor();
  }

  int m() const { return m_; }
  double ywy() const { return ywy_; }
  const std::vector<BasisTerm>& terms() const { return terms_; }
  double penalized_rss() const { return std::max(ywy_ - explained_, 0.0); }

  // Exact weighted RSS of the current coefficient solution.
  double exact_rss() const {
    const Eigen::VectorXd beta = solve_coefficients();
    const Eigen::VectorXd resid = y_ - B_.leftCols(m_) * beta;
    return resid.dot((wn_.array() * resid.array()).matrix());
  }

  Eigen::VectorXd solve_coefficients() const {
    Eigen::VectorXd z = w0_;
    L_.triangularView<Eigen::Lower>().transpose().solveInPlace(z);
    return z;
  }

  struct Candidate {
    double gain = -1.0;
    int parent = -1;
    int feature = -1;
    double knot = 0.0;
  };

  // Scans all (parent, feature, knot) candidates and returns the mirrored
  // pair with the largest exact RSS reduction.
  Candidate best_candidate(const std::vector<FeatureOrder>& feature_orders) const {
    Candidate best;
    Eigen::VectorXd u_full(n_), v_full(n_);
    Eigen::VectorXd Qtot(m_), Ptot(m_), Q(m_), P(m_), Qg(m_), Pg(m_);
    Eigen::VectorXd gu(m_), gv(m_), zu(m_), zv(m_);
    std::vector<char> in_support(static_cast<std::size_t>(n_));

    const int p = static_cast<int>(X_.cols());
    const double alpha = 0.05;
    const int endspan =
        cfg_.endspan >= 0
            ? cfg_.endspan
            : static_cast<int>(std::llround(3.0 - std::log2(alpha / p)));

    for (int parent = 0; parent < m_; ++parent) {
      if (terms_[static_cast<std::size_t>(parent)].degree() >= cfg_.max_degree) continue;
      u_full = (wn_.array() * B_.col(parent).array()).matrix();
      Qtot.noalias() = B_.leftCols(m_).transpose() * u_full;
      const double qy_tot = y_.dot(u_full);
      const double s0_tot = B_.col(parent).dot(u_full);

      Eigen::Index support_total = 0;
      for (Eigen::Index i = 0; i < n_; ++i) {
        in_support[static_cast<std::size_t>(i)] = B_(i, parent) != 0.0;
        support_total += in_support[static_cast<std::size_t>(i)];
      }
      int minspan = cfg_.minspan;
      if (minspan < 0) {
        const double ns = std::max<double>(static_cast<double>(support_total), 2.0);
        minspan = static_cast<int>(std::llround(
            -std::log2(-std::log1p(-alpha) / (p * ns)) / 2.5));
        minspan = std::max(minspan, 1);
      }

      for (int j = 0; j < X_.cols(); ++j) {
        if (terms_[static_cast<std::size_t>(parent)].uses_feature(j)) continue;
        const auto& fo = feature_orders[static_cast<std::size_t>(j)];
        const auto xj = X_.col(j);

        v_full = (u_full.array() * xj.array()).matrix();
        Ptot.noalias() = B_.leftCols(m_).transpose() * v_full;
        const double py_tot = y_.dot(v_full);
        const double s1_tot = B_.col(parent).dot(v_full);
        const double s2_tot = (v_full.array() * xj.array() * B_.col(parent).array()).sum();

        // Sweep knots in decreasing order; active sums cover points with
        // x_j strictly above the current knot.
        Q.setZero();
        P.setZero();
        double qy = 0.0, py = 0.0, s0 = 0.0, s1 = 0.0, s2 = 0.0;
        Eigen::Index support_above = 0;
        Eigen::Index since_last = minspan;  // first eligible knot passes

        for (std::size_t g = 0; g < fo.groups.size(); ++g) {
          const auto [gb, ge] = fo.groups[g];
          const double t = xj[fo.order[static_cast<std::size_t>(gb)]];

          // Sums over the tie group at t (in neither hinge's support).
          Qg.setZero();
          Pg.setZero();
          double qyg = 0.0, pyg = 0.0, s0g = 0.0, s1g = 0.0, s2g = 0.0;
          Eigen::Index support_group = 0;
          for (int k = gb; k < ge; ++k) {
            const int i = fo.order[static_cast<std::size_t>(k)];
            support_group += in_support[static_cast<std::size_t>(i)];
            const double uw = u_full[i];
            const double vw = v_full[i];
            Qg.noalias() += uw * Brm_.row(i).head(m_).transpose();
            Pg.noalias() += vw * Brm_.row(i).head(m_).transpose();
            qyg += uw * y_[i];
            pyg += vw * y_[i];
            const double bm = Brm_(i, parent);
            s0g += uw * bm;
            s1g += vw * bm;
            s2g += vw * xj[i] * bm;
          }

          const Eigen::Index support_below = support_total - support_above - support_group;
          const bool span_ok = support_above >= endspan && support_below >= endspan &&
                               since_last >= minspan;
          if (fo.is_candidate[g] && span_ok) {
            since_last = 0;
            // u = parent .* (x_j - t)+ over the active set.
            gu = P - t * Q;
            const double cu = py - t * qy;
            const double du = s2 - 2.0 * t * s1 + t * t * s0 + lambda_;
            // v = parent .* (t - x_j)+ over the complement (below t).
            gv = t * (Qtot - Q - Qg) - (Ptot - P - Pg);
            const double cv = t * (qy_tot - qy - qyg) - (py_tot - py - pyg);
            const double dv = t * t * (s0_tot - s0 - s0g) - 2.0 * t * (s1_tot - s1 - s1g) +
                              (s2_tot - s2 - s2g) + lambda_;

            zu = gu;
            L_.triangularView<Eigen::Lower>().solveInPlace(zu);
            double rho_u2 = du - zu.squaredNorm();
            rho_u2 = std::max(rho_u2, 0.25 * lambda_);
            const double rho_u = std::sqrt(rho_u2);
            const double eu = (cu - zu.dot(w0_)) / rho_u;

            zv = gv;
            L_.triangularView<Eigen::Lower>().solveInPlace(zv);
            const double zeta = -zu.dot(zv) / rho_u;  // u'Wv is 0 pointwise
            double rho_v2 = dv - zv.squaredNorm() - zeta * zeta;
            rho_v2 = std::max(rho_v2, 0.25 * lambda_);
            const double ev = (cv - zv.dot(w0_) - zeta * eu) / std::sqrt(rho_v2);

            const double gain = eu * eu + ev * ev;
            if (gain > best.gain) {
              best.gain = gain;
              best.parent = parent;
              best.feature = j;
              best.knot = t;
            }
          }

          Q += Qg;
          P += Pg;
          qy += qyg;
          py += pyg;
          s0 += s0g;
          s1 += s1g;
          s2 += s2g;
          support_above += support_group;
          since_last += support_group;
        }
      }
    }
    return best;
  }

  // Appends the mirrored pair and refits everything exactly.
  void add_pair(const Candidate& cand) {
    const BasisTerm parent = terms_[static_cast<std::size_t>(cand.parent)];
    BasisTerm plus = parent;
    plus.factors.push_back(Hinge{cand.feature, cand.knot, HingeDir::plus});
    BasisTerm minus = parent;
    minus.factors.push_back(Hinge{cand.feature, cand.knot, HingeDir::minus});

    for (const BasisTerm& term : {plus, minus}) {
      const int col = m_;
      for (Eigen::Index i = 0; i < n_; ++i) B_(i, col) = term.eval_row(X_, i);
      Brm_.col(col) = B_.col(col);
      const Eigen::VectorXd wcol = (wn_.array() * B_.col(col).array()).matrix();
      G_.col(col).head(m_).noalias() = B_.leftCols(m_).transpose() * wcol;
      G_.row(col).head(m_) = G_.col(col).head(m_).transpose();
      G_(col, col) = B_.col(col).dot(wcol);
      c_[col] = y_.dot(wcol);
      terms_.push_back(term);
      ++m_;
    }
    refactor();
  }

 private:
  void refactor() {
    lambda_ = scaled_ridge(G_, m_, cfg_.ridge);
    const Eigen::LLT<Eigen::MatrixXd> llt = ridged_llt(G_.topLeftCorner(m_, m_), lambda_);
    L_ = llt.matrixL();
    w0_ = c_.head(m_);
    L_.triangularView<Eigen::Lower>().solveInPlace(w0_);
    explained_ = w0_.squaredNorm();
  }

  const Eigen::MatrixXd& X_;
  const Eigen::VectorXd& y_;
  Eigen::VectorXd wn_;
  FitConfig cfg_;
  Eigen::Index n_;
  double ywy_ = 0.0;

  Eigen::MatrixXd B_;
  RowMajorMatrix Brm_;  // row-major mirror of B for the per-point sweep
  Eigen::MatrixXd G_;
  Eigen::VectorXd c_;
  Eigen::MatrixXd L_;
  Eigen::VectorXd w0_;
  double explained_ = 0.0;
  double lambda_ = 0.0;
  int m_ = 0;
  std::vector<BasisTerm> terms_;
};

// Weighted ridge-floored refit of an explicit term set; returns
// (coefficients, exact residual RSS).
std::pair<Eigen::VectorXd, double> refit_terms(const std::vector<BasisTerm>& terms,
                                               const Eigen::MatrixXd& X,
                                               const Eigen::VectorXd& y,
                                               const Eigen::VectorXd& wn, double ridge) {
  const Eigen::Index n = X.rows();
  const int m = static_cast<int>(terms.size());
  Eigen::MatrixXd B(n, m);
  for (int q = 0; q < m; ++q)
    for (Eigen::Index i = 0; i < n; ++i)
      B(i, q) = terms[static_cast<std::size_t>(q)].eval_row(X, i);
  Eigen::MatrixXd WB = wn.asDiagonal() * B;
  const Eigen::MatrixXd G = B.transpose() * WB;
  const Eigen::VectorXd c = WB.transpose() * y;
  double lambda = scaled_ridge(G, m, ridge);
  const Eigen::VectorXd beta = ridged_llt(G, lambda).solve(c);
  const Eigen::VectorXd resid = y - B * beta;
  const double rss = resid.dot((wn.array() * resid.array()).matrix());
  return {beta, rss};
}

}  // namespace

MarsModel fit_forward(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                      const Eigen::VectorXd& w, const FitConfig& cfg) {
  check_inputs(X, y, w, "fit_forward");
  if (cfg.max_terms < 1) throw Error("fit_forward: max_terms must be >= 1");
  if (cfg.max_degree < 1) throw Error("fit_forward: max_degree must be >= 1");
  const Eigen::VectorXd wn = normalize_weights(w);

  ForwardState state(X, y, wn, cfg);
  std::vector<FeatureOrder> orders;
  orders.reserve(static_cast<std::size_t>(X.cols()));
  for (Eigen::Index j = 0; j < X.cols(); ++j)
    orders.push_back(build_feature_order(X.col(j), cfg.knot_subsample));

  MarsModel model;
  model.n_features = static_cast<int>(X.cols());
  model.n_train = X.rows();
  model.forward_rss.push_back(state.exact_rss());

  while (state.m() + 2 <= cfg.max_terms) {
    // Nothing left to explain at floating-point resolution.
    if (state.penalized_rss() <= 1e-13 * std::max(state.ywy(), kTiny)) break;
    const auto cand = state.best_candidate(orders);
    if (cand.parent < 0) break;
    const double rel = cand.gain / std::max(state.penalized_rss(), kTiny);
    if (rel < cfg.min_rss_improvement) break;
    state.add_pair(cand);
    model.forward_rss.push_back(state.exact_rss());
    model.terms_added += 2;
  }

  model.terms = state.terms();
  model.coefficients = state.solve_coefficients();
  model.rss = state.exact_rss();
  model.effective_params = effective_params_of(model.terms, cfg.gcv_penalty);
  model.gcv = gcv_score(model.rss, model.n_train, model.effective_params);
  return model;
}

MarsModel prune_backward(const MarsModel& model, const Eigen::MatrixXd& X,
                         const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                         const FitConfig& cfg) {
  check_inputs(X, y, w, "prune_backward");
  if (model.terms.empty() || !model.terms.front().is_intercept())
    throw Error("prune_backward: model must start with an intercept term");
  const Eigen::VectorXd wn = normalize_weights(w);

  const Eigen::Index n = X.rows();
  const int m_full = static_cast<int>(model.terms.size());

  // One basis build for the whole deletion path; trial RSS values follow
  // algebraically from the Gram pieces.
  Eigen::MatrixXd B(n, m_full);
  for (int q = 0; q < m_full; ++q)
    for (Eigen::Index i = 0; i < n; ++i)
      B(i, q) = model.terms[static_cast<std::size_t>(q)].eval_row(X, i);
  const Eigen::MatrixXd WB = wn.asDiagonal() * B;
  const Eigen::MatrixXd G_raw = B.transpose() * WB;
  const Eigen::VectorXd c_full = WB.transpose() * y;
  const double ywy = y.dot((wn.array() * y.array()).matrix());

  auto subset_rss = [&](const std::vector<int>& idx) -> double {
    const int m = static_cast<int>(idx.size());
    Eigen::MatrixXd G(m, m);
    Eigen::VectorXd c(m);
    for (int a = 0; a < m; ++a) {
      c[a] = c_full[idx[static_cast<std::size_t>(a)]];
      for (int b = 0; b < m; ++b)
        G(a, b) = G_raw(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
    }
    double lambda = scaled_ridge(G, m, cfg.ridge);
    const Eigen::VectorXd beta = ridged_llt(G, lambda).solve(c);
    const double quad = beta.dot(G * beta);
    return std::max(ywy - 2.0 * beta.dot(c) + quad, 0.0);
  };

  auto terms_of = [&](const std::vector<int>& idx) {
    std::vector<BasisTerm> out;
    out.reserve(idx.size());
    for (int q : idx) out.push_back(model.terms[static_cast<std::size_t>(q)]);
    return out;
  };

  std::vector<int> current(static_cast<std::size_t>(m_full));
  std::iota(current.begin(), current.end(), 0);
  std::vector<int> best_idx = current;
  double best_gcv =
      gcv_score(subset_rss(current), n, effective_params_of(terms_of(current), cfg.gcv_penalty));

  while (current.size() > 1) {
    double step_gcv = std::numeric_limits<double>::infinity();
    std::size_t drop = 1;
    for (std::size_t q = 1; q < current.size(); ++q) {
      std::vector<int> trial;
      trial.reserve(current.size() - 1);
      for (std::size_t r = 0; r < current.size(); ++r)
        if (r != q) trial.push_back(current[r]);
      const double g =
          gcv_score(subset_rss(trial), n, effective_params_of(terms_of(trial), cfg.gcv_penalty));
      if (g < step_gcv) {
        step_gcv = g;
        drop = q;
      }
    }
    current.erase(current.begin() + static_cast<std::ptrdiff_t>(drop));
    if (step_gcv < best_gcv) {
      best_gcv = step_gcv;
      best_idx = current;
    }
  }

  MarsModel pruned;
  pruned.terms = terms_of(best_idx);
  pruned.n_features = model.n_features;
  pruned.n_train = n;
  auto [beta, rss] = refit_terms(pruned.terms, X, y, wn, cfg.ridge);
  pruned.coefficients = beta;
  pruned.rss = rss;
  pruned.effective_params = effective_params_of(pruned.terms, cfg.gcv_penalty);
  pruned.gcv = gcv_score(rss, n, pruned.effective_params);
  pruned.forward_rss = model.forward_rss;
  pruned.terms_added = model.terms_added;
  pruned.terms_pruned = static_cast<int>(model.terms.size() - pruned.terms.size());
  return pruned;
}

MarsModel fit_mars(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                   const Eigen::VectorXd& w, const FitConfig& cfg) {
  return prune_backward(fit_forward(X, y, w, cfg), X, y, w, cfg);
}

}  // namespace mars
}  // namespace limelab
