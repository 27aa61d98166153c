#include <apsm/loss.hpp>

#include <algorithm>
#include <cmath>
#include <memory>

namespace apsm {

SparsityLoss::SparsityLoss(RealVec w, double rho) : w_(std::move(w)), rho_(rho) {
  if (w_.size() == 0) throw std::invalid_argument("SparsityLoss: empty weight vector");
  require_finite(w_, "SparsityLoss: weights");
  require_finite(rho_, "SparsityLoss: rho");
  if (!(rho_ > 0.0)) throw std::invalid_argument("SparsityLoss: rho must be positive");
  w_lo_ = w_.minCoeff();
  w_hi_ = w_.maxCoeff();
  if (!(w_lo_ > 0.0)) throw std::invalid_argument("SparsityLoss: weights must be strictly positive");
}

double SparsityLoss::value(const RealVec& x) const {
  if (x.size() != w_.size()) throw std::invalid_argument("SparsityLoss: dimension mismatch");
  return std::max(0.0, w_.dot(x.cwiseAbs()) - rho_);
}

RealVec SparsityLoss::subgrad(const RealVec& x) const {
  if (x.size() != w_.size()) throw std::invalid_argument("SparsityLoss: dimension mismatch");
  RealVec g = RealVec::Zero(x.size());
  if (w_.dot(x.cwiseAbs()) <= rho_) return g;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (x[j] > 0.0) g[j] = w_[j];
    else if (x[j] < 0.0) g[j] = -w_[j];
  }
  return g;
}

ConvexLossOracle SparsityLoss::oracle() const {
  SparsityLoss copy = *this;
  return ConvexLossOracle{
      [copy](const RealVec& x) { return copy.value(x); },
      [copy](const RealVec& x) { return copy.subgrad(x); },
  };
}

std::vector<double> uniform_active_weights(std::size_t count) {
  if (count == 0) throw std::invalid_argument("uniform_active_weights: count must be positive");
  return std::vector<double>(count, 1.0 / static_cast<double>(count));
}

WindowLoss::WindowLoss(std::vector<Hyperslab> sets, RealVec anchor)
    : sets_(std::move(sets)), anchor_(std::move(anchor)) {
  init({});
}

WindowLoss::WindowLoss(std::vector<Hyperslab> sets, RealVec anchor, std::vector<double> omega)
    : sets_(std::move(sets)), anchor_(std::move(anchor)) {
  init(std::move(omega));
}

void WindowLoss::init(std::vector<double> omega_or_empty) {
  if (sets_.empty()) throw std::invalid_argument("WindowLoss: empty window");
  require_finite(anchor_, "WindowLoss: anchor");
  for (const Hyperslab& s : sets_)
    if (s.a.size() != anchor_.size()) throw std::invalid_argument("WindowLoss: dimension mismatch");

  // A slab counts as violated only when the projection measurably moves the
  // anchor. A violation below one ulp of the anchor coordinates rounds to a
  // zero displacement and would otherwise poison the normalizer with 0/0.
  std::vector<RealVec> projections;
  std::vector<double> sq_dists;
  for (std::size_t i = 0; i < sets_.size(); ++i) {
    if (sets_[i].contains(anchor_)) continue;
    RealVec p = project_hyperslab(anchor_, sets_[i]);
    const double sq = (anchor_ - p).squaredNorm();
    if (sq == 0.0) continue;
    active_.push_back(i);
    projections.push_back(std::move(p));
    sq_dists.push_back(sq);
  }

  anchor_eval_.subgrad = RealVec::Zero(anchor_.size());
  anchor_eval_.weighted_projection = RealVec::Zero(anchor_.size());
  if (active_.empty()) {
    if (!omega_or_empty.empty())
      throw std::invalid_argument("WindowLoss: weights supplied but no slab is violated");
    return;
  }

  if (omega_or_empty.empty()) {
    omega_ = uniform_active_weights(active_.size());
  } else {
    if (omega_or_empty.size() != active_.size())
      throw std::invalid_argument("WindowLoss: need one weight per violated slab");
    double sum = 0.0;
    for (double w : omega_or_empty) {
      if (!(w > 0.0 && w <= 1.0)) throw std::invalid_argument("WindowLoss: weights must lie in (0, 1]");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("WindowLoss: weights must sum to 1");
    omega_ = std::move(omega_or_empty);
  }

  dist_.resize(active_.size());
  RealVec residual_sum = RealVec::Zero(anchor_.size());
  for (std::size_t k = 0; k < active_.size(); ++k) {
    const RealVec& p = projections[k];
    const double sq = sq_dists[k];
    dist_[k] = std::sqrt(sq);
    anchor_eval_.normalizer += omega_[k] * dist_[k];
    anchor_eval_.weighted_sq_dist += omega_[k] * sq;
    anchor_eval_.weighted_projection += omega_[k] * p;
    residual_sum += omega_[k] * (anchor_ - p);
  }
  anchor_eval_.value = anchor_eval_.weighted_sq_dist / anchor_eval_.normalizer;
  anchor_eval_.subgrad = residual_sum / anchor_eval_.normalizer;
}

double WindowLoss::value(const RealVec& x) const {
  if (x.size() != anchor_.size()) throw std::invalid_argument("WindowLoss: dimension mismatch");
  if (active_.empty()) return 0.0;
  double v = 0.0;
  for (std::size_t k = 0; k < active_.size(); ++k)
    v += omega_[k] * dist_[k] * hyperslab_distance(x, sets_[active_[k]]);
  return v / anchor_eval_.normalizer;
}

LossEval WindowLoss::eval_at_anchor() const { return anchor_eval_; }

ConvexLossOracle WindowLoss::oracle() const {
  auto self = std::make_shared<WindowLoss>(*this);
  return ConvexLossOracle{
      [self](const RealVec& x) { return self->value(x); },
      [self](const RealVec& x) -> RealVec {
        if ((x - self->anchor_).norm() > zero_threshold(self->anchor_))
          throw std::logic_error("WindowLoss: subgradient is only available at the anchor");
        return self->anchor_eval_.subgrad;
      },
  };
}

double WindowLoss::max_distance(const RealVec& x) const {
  double m = 0.0;
  for (const Hyperslab& s : sets_) m = std::max(m, hyperslab_distance(x, s));
  return m;
}

}  // namespace apsm
