#include "convex_order/recover.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <numeric>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "convex_order/error.hpp"

namespace convex_order {

namespace {

std::vector<Eigen::Index> sorted_by_first(const PointMatrix& pts) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(pts.rows()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index l, Eigen::Index r) { return pts(l, 0) < pts(r, 0); });
  return idx;
}

double cross(const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return (a - o).x() * (b - o).y() - (a - o).y() * (b - o).x();
}

// Weighted least-squares line through (x, y) evaluated at x0.
double local_linear(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& w,
                    double x0) {
  double sw = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    sw += w[j];
    sx += w[j] * x[j];
    sy += w[j] * y[j];
  }
  const double xm = sx / sw, ym = sy / sw;
  double sxx = 0.0, sxy = 0.0, spread = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    sxx += w[j] * (x[j] - xm) * (x[j] - xm);
    sxy += w[j] * (x[j] - xm) * (y[j] - ym);
    spread = std::max(spread, std::abs(x[j] - xm));
  }
  if (sxx <= 1e-14 * sw * std::max(spread * spread, 1e-300)) return ym;
  return ym + sxy / sxx * (x0 - xm);
}

struct Piecewise1d {
  std::vector<double> x, g, f;

  PotentialValue operator()(const Eigen::VectorXd& q) const {
    const double t = q[0];
    PotentialValue out;
    out.gradient.resize(1);
    const double span = x.back() - x.front();
    const double slack = 1e-12 * std::max(1.0, span);
    out.extrapolated = t < x.front() - slack || t > x.back() + slack;
    if (t <= x.front()) {
      out.gradient[0] = g.front();
      out.value = f.front() + g.front() * (t - x.front());
      return out;
    }
    if (t >= x.back()) {
      out.gradient[0] = g.back();
      out.value = f.back() + g.back() * (t - x.back());
      return out;
    }
    const auto k = static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), t) - x.begin()) - 1;
    const double d = t - x[k], len = x[k + 1] - x[k];
    const double slope = len > 0.0 ? (g[k + 1] - g[k]) / len : 0.0;
    out.gradient[0] = g[k] + slope * d;
    out.value = f[k] + g[k] * d + 0.5 * slope * d * d;
    return out;
  }
};

}  // namespace

GradientField gradient_from_plan(const DiscreteMeasure& nu, const DiscreteMeasure& rho, const TransportPlan& plan) {
  require(nu.dim() == rho.dim(), ErrorCode::kDimensionMismatch, "nu and rho dims differ");
  require(plan.matrix.rows() == rho.size() && plan.matrix.cols() == nu.size(), ErrorCode::kLengthMismatch,
          "plan must be rho.size() x nu.size()");
  const PointMatrix& y = nu.points();
  const int d = nu.dim();

  // Group identical nu atoms, keeping first-appearance order.
  auto less = [&](Eigen::Index a, Eigen::Index b) {
    for (int k = 0; k < d; ++k)
      if (y(a, k) != y(b, k)) return y(a, k) < y(b, k);
    return false;
  };
  std::map<Eigen::Index, std::size_t, decltype(less)> group_of(less);
  std::vector<std::vector<Eigen::Index>> groups;
  for (Eigen::Index j = 0; j < y.rows(); ++j) {
    auto [it, fresh] = group_of.emplace(j, groups.size());
    if (fresh) groups.emplace_back();
    groups[it->second].push_back(j);
  }

  GradientField out;
  std::vector<Eigen::Index> keep;
  std::vector<Eigen::RowVectorXd> means;
  for (const auto& grp : groups) {
    double mass = 0.0;
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(d);
    for (Eigen::Index j : grp) {
      mass += plan.matrix.col(j).sum();
      acc += plan.matrix.col(j).transpose() * rho.points();
    }
    if (mass > 0.0) {
      keep.push_back(grp.front());
      means.push_back(acc / mass);
    } else {
      out.skipped.insert(out.skipped.end(), grp.begin(), grp.end());
    }
  }
  out.anchors.resize(static_cast<Eigen::Index>(keep.size()), d);
  out.values.resize(static_cast<Eigen::Index>(keep.size()), d);
  for (std::size_t r = 0; r < keep.size(); ++r) {
    out.anchors.row(static_cast<Eigen::Index>(r)) = y.row(keep[r]);
    out.values.row(static_cast<Eigen::Index>(r)) = means[r];
  }
  return out;
}

ScalarField integrate_1d(const GradientField& field) {
  require(field.dim() == 1 && field.values.cols() == 1, ErrorCode::kInvalidDimension, "integrate_1d needs a 1D field");
  require(field.size() >= 2, ErrorCode::kSingleAnchorDegenerate, "need at least two anchors to integrate");
  const auto idx = sorted_by_first(field.anchors);
  ScalarField out;
  out.normalization = Normalization::kAnchoredAtMin;
  out.anchors.resize(field.size(), 1);
  out.values.resize(field.size());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const auto i = static_cast<Eigen::Index>(r);
    out.anchors(i, 0) = field.anchors(idx[r], 0);
    if (r == 0) {
      out.values[0] = 0.0;
      continue;
    }
    const double dx = out.anchors(i, 0) - out.anchors(i - 1, 0);
    out.values[i] = out.values[i - 1] + 0.5 * (field.values(idx[r - 1], 0) + field.values(idx[r], 0)) * dx;
  }
  return out;
}

GradientField lowess_smooth(const GradientField& field, double span) {
  require(field.dim() == 1 && field.values.cols() == 1, ErrorCode::kInvalidDimension, "lowess_smooth needs a 1D field");
  require(span > 0.0 && span <= 1.0, ErrorCode::kInvalidArgument, "span must lie in (0, 1]");
  const auto n = static_cast<std::size_t>(field.size());
  const auto r = static_cast<std::size_t>(std::ceil(span * static_cast<double>(n) - 1e-9));
  require(r >= 3, ErrorCode::kSpanTooSmall, "lowess window holds fewer than 3 points");

  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = field.anchors(static_cast<Eigen::Index>(i), 0);
    y[i] = field.values(static_cast<Eigen::Index>(i), 0);
  }
  GradientField out = field;
  std::vector<double> dist(n), w(n), scratch(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) dist[j] = std::abs(x[j] - x[i]);
    scratch = dist;
    std::nth_element(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(r - 1), scratch.end());
    const double radius = scratch[r - 1];
    for (std::size_t j = 0; j < n; ++j) {
      if (radius <= 0.0) {
        w[j] = dist[j] <= 0.0 ? 1.0 : 0.0;
      } else {
        const double u = dist[j] / radius;
        w[j] = u < 1.0 ? std::pow(1.0 - u * u * u, 3) : 0.0;
      }
    }
    out.values(static_cast<Eigen::Index>(i), 0) = local_linear(x, y, w, x[i]);
  }
  return out;
}

VectorField2 idw_field(const GradientField& field, int k) {
  require(field.dim() == 2 && field.values.cols() == 2, ErrorCode::kInvalidDimension, "idw_field needs a 2D field");
  require(field.size() >= 1 && k >= 1, ErrorCode::kInvalidArgument, "idw_field needs anchors and k >= 1");
  const PointMatrix anchors = field.anchors, values = field.values;
  const auto kk = static_cast<std::size_t>(std::min<Eigen::Index>(k, anchors.rows()));
  return [anchors, values, kk](const Eigen::Vector2d& p) {
    std::vector<std::pair<double, Eigen::Index>> d(static_cast<std::size_t>(anchors.rows()));
    for (Eigen::Index i = 0; i < anchors.rows(); ++i)
      d[static_cast<std::size_t>(i)] = {(anchors.row(i).transpose() - p).squaredNorm(), i};
    std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(kk), d.end());
    if (d.front().first < 1e-24) return Eigen::Vector2d(values.row(d.front().second).transpose());
    Eigen::Vector2d acc = Eigen::Vector2d::Zero();
    double sw = 0.0;
    for (std::size_t r = 0; r < kk; ++r) {
      const double w = 1.0 / d[r].first;
      acc += w * values.row(d[r].second).transpose();
      sw += w;
    }
    return Eigen::Vector2d(acc / sw);
  };
}

PointMatrix convex_hull(const PointMatrix& points) {
  require(points.cols() == 2, ErrorCode::kInvalidDimension, "convex_hull is planar");
  std::vector<Eigen::Vector2d> p;
  for (Eigen::Index i = 0; i < points.rows(); ++i) p.emplace_back(points(i, 0), points(i, 1));
  std::sort(p.begin(), p.end(), [](const auto& a, const auto& b) { return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y()); });
  p.erase(std::unique(p.begin(), p.end()), p.end());
  if (p.size() < 3) {
    PointMatrix out(static_cast<Eigen::Index>(p.size()), 2);
    for (std::size_t i = 0; i < p.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = p[i].transpose();
    return out;
  }
  std::vector<Eigen::Vector2d> h(2 * p.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], p[i]) <= 0.0) --k;
    h[k++] = p[i];
  }
  for (std::size_t i = p.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(h[k - 2], h[k - 1], p[i]) <= 0.0) --k;
    h[k++] = p[i];
  }
  h.resize(k - 1);
  PointMatrix out(static_cast<Eigen::Index>(h.size()), 2);
  for (std::size_t i = 0; i < h.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = h[i].transpose();
  return out;
}

bool inside_hull(const PointMatrix& hull, const Eigen::Vector2d& p, double slack) {
  const Eigen::Index m = hull.rows();
  if (m < 3) return false;
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Vector2d a = hull.row(i).transpose(), b = hull.row((i + 1) % m).transpose();
    if (cross(a, b, p) < -slack * (b - a).norm()) return false;
  }
  return true;
}

PoissonProblem assemble_poisson(const GradientField& field, double h) {
  require(field.dim() == 2, ErrorCode::kInvalidDimension, "assemble_poisson needs a 2D field");
  require(field.size() >= 8, ErrorCode::kDegenerateDomain, "need at least 8 anchors");
  return assemble_poisson(idw_field(field, 4), field.anchors, h);
}

PoissonProblem assemble_poisson(const VectorField2& g, const PointMatrix& domain_points, double h) {
  require(h > 0.0 && std::isfinite(h), ErrorCode::kInvalidArgument, "grid spacing must be positive");
  PoissonProblem pb;
  pb.h = h;
  pb.hull = convex_hull(domain_points);
  require(pb.hull.rows() >= 3, ErrorCode::kDegenerateDomain, "anchors are collinear");
  const Eigen::Vector2d lo = pb.hull.colwise().minCoeff().transpose(), hi = pb.hull.colwise().maxCoeff().transpose();
  const double cells_x = std::ceil((hi.x() - lo.x()) / h) + 2, cells_y = std::ceil((hi.y() - lo.y()) / h) + 2;
  require(cells_x * cells_y <= 4e6, ErrorCode::kInvalidArgument, "grid too fine for the domain");
  pb.origin = lo - Eigen::Vector2d::Constant(h);
  pb.nx = static_cast<int>(cells_x);
  pb.ny = static_cast<int>(cells_y);

  const auto total = static_cast<std::size_t>(pb.nx) * static_cast<std::size_t>(pb.ny);
  pb.active.assign(total, -1);
  std::vector<Eigen::Vector2d> raster(total);
  std::vector<std::pair<int, int>> cells;
  const double slack = 1e-12 * std::max(1.0, (hi - lo).norm());
  for (int iy = 0; iy < pb.ny; ++iy) {
    for (int ix = 0; ix < pb.nx; ++ix) {
      const auto c = static_cast<std::size_t>(ix + pb.nx * iy);
      raster[c] = g(pb.centre(ix, iy));
      if (inside_hull(pb.hull, pb.centre(ix, iy), slack)) {
        pb.active[c] = static_cast<int>(cells.size());
        cells.emplace_back(ix, iy);
      }
    }
  }
  require(!cells.empty(), ErrorCode::kDegenerateDomain, "no grid cell centre inside the hull");

  const auto n = static_cast<Eigen::Index>(cells.size());
  pb.centres.resize(n, 2);
  pb.g.resize(n, 2);
  pb.source.resize(n);
  pb.boundary_flux.setZero(n);
  auto at = [&](int ix, int iy) -> const Eigen::Vector2d& { return raster[static_cast<std::size_t>(ix + pb.nx * iy)]; };
  static constexpr int kDx[] = {1, -1, 0, 0}, kDy[] = {0, 0, 1, -1};
  double div_sum = 0.0, div_abs = 0.0, flux_sum = 0.0, flux_abs = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto [ix, iy] = cells[static_cast<std::size_t>(i)];
    const Eigen::Vector2d c = pb.centre(ix, iy);
    pb.centres.row(i) = c.transpose();
    pb.g.row(i) = at(ix, iy).transpose();
    pb.source[i] = (at(ix + 1, iy).x() - at(ix - 1, iy).x() + at(ix, iy + 1).y() - at(ix, iy - 1).y()) / (2.0 * h);
    for (int f = 0; f < 4; ++f) {
      if (pb.cell(ix + kDx[f], iy + kDy[f]) >= 0) continue;
      const Eigen::Vector2d normal(kDx[f], kDy[f]);
      pb.boundary_flux[i] += normal.dot(g(c + 0.5 * h * normal));
    }
    div_sum += pb.source[i];
    div_abs += std::abs(pb.source[i]);
    flux_sum += pb.boundary_flux[i];
    flux_abs += std::abs(pb.boundary_flux[i]);
  }
  pb.scale = h * h * div_abs + h * flux_abs;
  pb.residual_before = std::abs(h * h * div_sum - h * flux_sum);
  // Discrete Stokes defect, spread uniformly over the source.
  pb.source.array() -= (h * h * div_sum - h * flux_sum) / (h * h * static_cast<double>(n));
  pb.residual_after = std::abs(h * h * pb.source.sum() - h * flux_sum);
  return pb;
}

ScalarField solve_poisson_neumann(const PoissonProblem& pb) {
  const Eigen::Index n = pb.size();
  require(n >= 1, ErrorCode::kDegenerateDomain, "empty domain");
  require(pb.residual_after <= 1e-6 * std::max(pb.scale, 1e-300) || pb.residual_after <= 1e-300,
          ErrorCode::kInvalidArgument, "compatibility residual out of tolerance");
  const double inv_h2 = 1.0 / (pb.h * pb.h);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(7 * n));
  Eigen::VectorXd b(n + 1);
  static constexpr int kDx[] = {1, -1, 0, 0}, kDy[] = {0, 0, 1, -1};
  for (Eigen::Index i = 0; i < n; ++i) {
    const int ix = static_cast<int>(std::lround((pb.centres(i, 0) - pb.origin.x()) / pb.h - 0.5));
    const int iy = static_cast<int>(std::lround((pb.centres(i, 1) - pb.origin.y()) / pb.h - 0.5));
    double diag = 0.0;
    for (int f = 0; f < 4; ++f) {
      const int j = pb.cell(ix + kDx[f], iy + kDy[f]);
      if (j < 0) continue;
      trip.emplace_back(i, j, inv_h2);
      diag -= inv_h2;
    }
    trip.emplace_back(i, i, diag);
    trip.emplace_back(i, n, 1.0);
    trip.emplace_back(n, i, 1.0);
    b[i] = pb.source[i] - pb.boundary_flux[i] / pb.h;
  }
  b[n] = 0.0;
  Eigen::SparseMatrix<double> a(n + 1, n + 1);
  a.setFromTriplets(trip.begin(), trip.end());
  a.makeCompressed();

  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(a);
  require(lu.info() == Eigen::Success, ErrorCode::kSingularSystem, "Poisson system factorisation failed");
  Eigen::VectorXd x = lu.solve(b);
  require(lu.info() == Eigen::Success, ErrorCode::kSingularSystem, "Poisson solve failed");
  const double bnorm = b.cwiseAbs().maxCoeff();
  double res = (a * x - b).cwiseAbs().maxCoeff();
  if (res > 1e-8 * bnorm) {
    x += lu.solve(b - a * x);
    res = (a * x - b).cwiseAbs().maxCoeff();
  }
  require(res <= 1e-8 * bnorm || res == 0.0, ErrorCode::kNoConvergence, "Poisson residual above 1e-8 relative");

  ScalarField out;
  out.anchors = pb.centres;
  out.values = x.head(n);
  out.normalization = Normalization::kZeroMean;
  return out;
}

Potential Potential::analytic(int dim, std::function<double(const Eigen::VectorXd&)> f,
                              std::function<Eigen::VectorXd(const Eigen::VectorXd&)> grad) {
  return Potential(dim, [f = std::move(f), grad = std::move(grad)](const Eigen::VectorXd& x) {
    return PotentialValue{f(x), grad(x), false};
  });
}

Potential Potential::piecewise_1d(const GradientField& gradient) {
  const ScalarField f = integrate_1d(gradient);
  const auto idx = sorted_by_first(gradient.anchors);
  Piecewise1d pw;
  for (std::size_t r = 0; r < idx.size(); ++r) {
    pw.x.push_back(f.anchors(static_cast<Eigen::Index>(r), 0));
    pw.g.push_back(gradient.values(idx[r], 0));
    pw.f.push_back(f.values[static_cast<Eigen::Index>(r)]);
  }
  return Potential(1, pw);
}

Potential Potential::grid_2d(const PoissonProblem& problem, const ScalarField& solution) {
  require(solution.values.size() == problem.size(), ErrorCode::kLengthMismatch, "solution does not match the grid");
  auto pb = std::make_shared<const PoissonProblem>(problem);
  auto vals = std::make_shared<const Eigen::VectorXd>(solution.values);
  const double slack = 1e-9 * std::max(1.0, pb->h * std::max(pb->nx, pb->ny));
  return Potential(2, [pb, vals, slack](const Eigen::VectorXd& x) {
    PotentialValue out;
    out.gradient.resize(2);
    const Eigen::Vector2d p(x[0], x[1]);
    out.extrapolated = !inside_hull(pb->hull, p, slack);
    const Eigen::Vector2d q = (p - pb->origin) / pb->h - Eigen::Vector2d::Constant(0.5);
    const int i0 = static_cast<int>(std::floor(q.x())), j0 = static_cast<int>(std::floor(q.y()));
    const int c00 = pb->cell(i0, j0), c10 = pb->cell(i0 + 1, j0), c01 = pb->cell(i0, j0 + 1),
              c11 = pb->cell(i0 + 1, j0 + 1);
    if (c00 >= 0 && c10 >= 0 && c01 >= 0 && c11 >= 0) {
      const double tx = q.x() - i0, ty = q.y() - j0;
      const double w00 = (1 - tx) * (1 - ty), w10 = tx * (1 - ty), w01 = (1 - tx) * ty, w11 = tx * ty;
      out.value = w00 * (*vals)[c00] + w10 * (*vals)[c10] + w01 * (*vals)[c01] + w11 * (*vals)[c11];
      out.gradient = (w00 * pb->g.row(c00) + w10 * pb->g.row(c10) + w01 * pb->g.row(c01) + w11 * pb->g.row(c11)).transpose();
      return out;
    }
    Eigen::Index best = 0;
    (pb->centres.rowwise() - p.transpose()).rowwise().squaredNorm().minCoeff(&best);
    const Eigen::Vector2d c = pb->centres.row(best).transpose(), gc = pb->g.row(best).transpose();
    out.value = (*vals)[best] + gc.dot(p - c);
    out.gradient = gc;
    return out;
  });
}

Recovery recover_f(const DiscreteMeasure& nu, const DiscreteMeasure& rho, const TransportPlan& plan,
                   const RecoverConfig& cfg) {
  require(nu.dim() == rho.dim(), ErrorCode::kDimensionMismatch, "nu and rho dims differ");
  require(nu.dim() == 1 || nu.dim() == 2, ErrorCode::kUnsupportedDimension, "recovery supports d = 1 or 2");
  Recovery out;
  GradientField raw = gradient_from_plan(nu, rho, plan);
  if (nu.dim() == 1) {
    const auto n = static_cast<double>(raw.size());
    out.smoothed = cfg.smooth && raw.size() >= 3;
    out.gradient = out.smoothed ? lowess_smooth(raw, std::min(1.0, std::max(cfg.span, 3.0 / n))) : raw;
    out.potential = integrate_1d(out.gradient);
    out.evaluator = Potential::piecewise_1d(out.gradient);
    return out;
  }
  out.gradient = raw;
  const Eigen::RowVectorXd extent = raw.anchors.colwise().maxCoeff() - raw.anchors.colwise().minCoeff();
  const double h = cfg.h > 0.0 ? cfg.h : extent.maxCoeff() / 32.0;
  require(h > 0.0, ErrorCode::kDegenerateDomain, "anchors coincide");
  out.problem = assemble_poisson(raw, h);
  out.grid_values = solve_poisson_neumann(*out.problem);
  out.evaluator = Potential::grid_2d(*out.problem, *out.grid_values);
  out.potential.anchors = raw.anchors;
  out.potential.values.resize(raw.size());
  out.potential.normalization = Normalization::kZeroMean;
  for (Eigen::Index i = 0; i < raw.size(); ++i) out.potential.values[i] = out.evaluator(raw.anchors.row(i).transpose()).value;
  return out;
}

}  // namespace convex_order
