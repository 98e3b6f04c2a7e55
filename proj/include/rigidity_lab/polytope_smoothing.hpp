#pragma once
// Convex polytopes {<a_l, x> <= b_l}, their log-sum-exp smoothings
// {sum_l exp(lambda u_l) <= 1}, Gauss-map differentials and trace norms.

#include "clifford.hpp"
#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace rigidity_lab {

struct Facet {
  RVec a;  // outward Euclidean unit normal
  double b = 0;
};

namespace detail {

// Visit every k-subset of {0..m-1} in lexicographic order.
template <class F>
void for_each_subset(int m, int k, F&& fn) {
  if (k > m || k <= 0) return;
  std::vector<int> idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    fn(idx);
    int i = k - 1;
    while (i >= 0 && idx[i] == m - k + i) --i;
    if (i < 0) return;
    ++idx[i];
    for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

inline int affine_dimension(const std::vector<RVec>& pts, double tol = 1e-9) {
  if (pts.empty()) return -1;
  const int n = static_cast<int>(pts[0].size());
  RMat D(n, static_cast<int>(pts.size()));
  for (std::size_t k = 0; k < pts.size(); ++k) D.col(static_cast<int>(k)) = pts[k] - pts[0];
  if (pts.size() == 1) return 0;
  Eigen::JacobiSVD<RMat> svd(D);
  int r = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > tol) ++r;
  return r;
}

// Orthonormal basis of the complement of a unit vector, deterministic.
inline RMat tangent_frame(const RVec& N) {
  const int n = static_cast<int>(N.size());
  Eigen::HouseholderQR<RMat> qr(N);
  RMat Q = qr.householderQ();
  return Q.rightCols(n - 1);
}

}  // namespace detail

struct ConvexPolytope {
  int n = 0;
  std::vector<Facet> facets;
  RVec interior;
  std::vector<RVec> vertices;

  RMat A() const {
    RMat M(static_cast<int>(facets.size()), n);
    for (std::size_t l = 0; l < facets.size(); ++l) M.row(static_cast<int>(l)) = facets[l].a.transpose();
    return M;
  }
  RVec b() const {
    RVec v(static_cast<int>(facets.size()));
    for (std::size_t l = 0; l < facets.size(); ++l) v(static_cast<int>(l)) = facets[l].b;
    return v;
  }
  double u(std::size_t l, const RVec& x) const { return facets[l].a.dot(x) - facets[l].b; }
  double max_u(const RVec& x) const {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < facets.size(); ++l) m = std::max(m, u(l, x));
    return m;
  }
  std::vector<int> tight(const RVec& x, double tol = 1e-9) const {
    std::vector<int> t;
    for (std::size_t l = 0; l < facets.size(); ++l)
      if (std::abs(u(l, x)) <= tol) t.push_back(static_cast<int>(l));
    return t;
  }
};

inline std::vector<RVec> enumerate_vertices(int n, const std::vector<Facet>& facets) {
  std::vector<RVec> out;
  const int m = static_cast<int>(facets.size());
  detail::for_each_subset(m, n, [&](const std::vector<int>& idx) {
    RMat M(n, n);
    RVec rhs(n);
    for (int k = 0; k < n; ++k) {
      M.row(k) = facets[idx[k]].a.transpose();
      rhs(k) = facets[idx[k]].b;
    }
    Eigen::FullPivLU<RMat> lu(M);
    if (lu.rank() < n) return;
    RVec x = lu.solve(rhs);
    for (const auto& f : facets)
      if (f.a.dot(x) - f.b > 1e-9) return;
    for (const auto& v : out)
      if ((v - x).norm() < 1e-9) return;
    out.push_back(x);
  });
  return out;
}

// Validates and returns a polytope; rejects non-unit normals, duplicate
// facets, an interior point that is not strictly inside, unboundedness and
// redundant facets.
inline ConvexPolytope make_polytope(std::vector<Facet> facets, const RVec& interior) {
  if (facets.empty()) throw std::invalid_argument("polytope: no facets");
  ConvexPolytope P;
  P.n = static_cast<int>(interior.size());
  const int n = P.n;
  for (std::size_t l = 0; l < facets.size(); ++l) {
    if (facets[l].a.size() != n) throw std::invalid_argument("polytope: facet dimension mismatch");
    if (std::abs(facets[l].a.norm() - 1.0) > 1e-12)
      throw std::invalid_argument("polytope: facet " + std::to_string(l) + " normal is not unit");
    for (std::size_t k = 0; k < l; ++k)
      if ((facets[k].a - facets[l].a).norm() < 1e-12)
        throw std::invalid_argument("polytope: facets " + std::to_string(k) + " and " + std::to_string(l) +
                                    " are parallel duplicates");
  }
  P.facets = std::move(facets);
  P.interior = interior;
  for (std::size_t l = 0; l < P.facets.size(); ++l)
    if (!(P.u(l, interior) < 0))
      throw std::invalid_argument("polytope: interior point violates facet " + std::to_string(l));
  return P;
}

struct BoundednessReport {
  bool bounded = true;
  RVec recession;  // a nonzero direction d with A d <= 0 when unbounded
};

inline BoundednessReport check_bounded(const ConvexPolytope& P) {
  BoundednessReport r;
  const int n = P.n;
  RMat A = P.A();
  Eigen::FullPivLU<RMat> lu(A);
  if (lu.rank() < n) {
    r.bounded = false;
    r.recession = lu.kernel().col(0);
    return r;
  }
  const int m = static_cast<int>(P.facets.size());
  if (n == 1) return r;
  detail::for_each_subset(m, n - 1, [&](const std::vector<int>& idx) {
    if (!r.bounded) return;
    RMat M(n - 1, n);
    for (int k = 0; k < n - 1; ++k) M.row(k) = P.facets[idx[k]].a.transpose();
    Eigen::FullPivLU<RMat> l2(M);
    if (l2.rank() < n - 1) return;
    RVec d = l2.kernel().col(0);
    for (double s : {1.0, -1.0}) {
      RVec dd = s * d;
      if ((A * dd).maxCoeff() <= 1e-12) {
        r.bounded = false;
        r.recession = dd;
        return;
      }
    }
  });
  return r;
}

// Bounded polytope with its vertices; each facet must be a true facet.
inline ConvexPolytope make_bounded_polytope(std::vector<Facet> facets, const RVec& interior) {
  ConvexPolytope P = make_polytope(std::move(facets), interior);
  auto br = check_bounded(P);
  if (!br.bounded) throw std::invalid_argument("polytope: unbounded");
  P.vertices = enumerate_vertices(P.n, P.facets);
  for (std::size_t l = 0; l < P.facets.size(); ++l) {
    std::vector<RVec> on;
    for (const auto& v : P.vertices)
      if (std::abs(P.u(l, v)) <= 1e-9) on.push_back(v);
    if (detail::affine_dimension(on) < P.n - 1)
      throw std::invalid_argument("polytope: facet " + std::to_string(l) + " is redundant");
  }
  return P;
}

inline ConvexPolytope half_space(const RVec& a, double b, const RVec& interior) {
  return make_polytope({Facet{a, b}}, interior);
}

// Axis-aligned box [lo, hi].
inline ConvexPolytope make_box_polytope(const RVec& lo, const RVec& hi) {
  const int n = static_cast<int>(lo.size());
  std::vector<Facet> f;
  for (int i = 0; i < n; ++i) {
    f.push_back({axis(n, i), hi(i)});
    f.push_back({RVec(-axis(n, i)), -lo(i)});
  }
  return make_bounded_polytope(f, 0.5 * (lo + hi));
}

// ---------------------------------------------------------------------------
// smoothing

struct SmoothingValues {
  double F;
  RVec grad;
  RMat hess;
};

inline SmoothingValues smoothing_values(const ConvexPolytope& P, double lambda, const RVec& x) {
  SmoothingValues s{0.0, RVec::Zero(P.n), RMat::Zero(P.n, P.n)};
  for (std::size_t l = 0; l < P.facets.size(); ++l) {
    const RVec& a = P.facets[l].a;
    double w = std::exp(lambda * P.u(l, x));
    s.F += w;
    s.grad += lambda * w * a;
    s.hess += lambda * lambda * w * a * a.transpose();
  }
  return s;
}

// Normalized positive combination of facet normals weighted by exp(lambda u).
inline RVec homotopic_gauss_map(const ConvexPolytope& P, double lambda, const RVec& x) {
  RVec v = RVec::Zero(P.n);
  for (std::size_t l = 0; l < P.facets.size(); ++l) v += std::exp(lambda * P.u(l, x)) * P.facets[l].a;
  return v / v.norm();
}

struct BoundarySample {
  RVec x;
  RVec N;        // outward unit normal
  RMat frame;    // n x (n-1) orthonormal tangent basis
  RMat dN;       // differential of N in that frame
  double H = 0;  // Euclidean mean curvature, divergence of N
  double F_residual = 0;
  double grad_norm = 0;
  double max_u = 0;
};

struct SmoothedBoundary {
  double lambda = 0;
  int n = 0;
  std::vector<BoundarySample> samples;
};

inline BoundarySample sample_from_values(const RVec& x, const SmoothingValues& v) {
  BoundarySample s;
  s.x = x;
  s.grad_norm = v.grad.norm();
  s.N = v.grad / s.grad_norm;
  s.frame = detail::tangent_frame(s.N);
  s.dN = s.frame.transpose() * v.hess * s.frame / s.grad_norm;
  s.H = s.dN.trace();
  s.F_residual = std::abs(v.F - 1.0);
  return s;
}

// Crossing of F = 1 along interior + t dir.
inline double ray_crossing(const ConvexPolytope& P, double lambda, const RVec& dir) {
  auto g = [&](double t) {
    double F = 0;
    RVec x = P.interior + t * dir;
    for (std::size_t l = 0; l < P.facets.size(); ++l) F += std::exp(lambda * P.u(l, x));
    return F - 1.0;
  };
  if (!(g(0) < 0)) throw std::domain_error("boundary_sample: interior point outside the smoothed domain");
  double lo = 0, hi = 1;
  int doublings = 0;
  while (!(g(hi) > 0)) {
    lo = hi;
    hi *= 2;
    if (++doublings > 200) throw std::runtime_error("boundary_sample: ray never crosses the level set");
  }
  for (int k = 0; k < 80; ++k) {
    double mid = 0.5 * (lo + hi);
    (g(mid) > 0 ? hi : lo) = mid;
  }
  double t = 0.5 * (lo + hi);
  for (int k = 0; k < 3; ++k) {
    RVec x = P.interior + t * dir;
    auto v = smoothing_values(P, lambda, x);
    double slope = v.grad.dot(dir);
    if (!(slope > 0)) break;
    double next = t - (v.F - 1.0) / slope;
    if (next < lo || next > hi) break;
    t = next;
  }
  return t;
}

inline SmoothedBoundary boundary_sample(const ConvexPolytope& P, double lambda, const std::vector<RVec>& directions,
                                        int jobs = 1) {
  if (!(lambda > 0)) throw std::invalid_argument("boundary_sample: lambda must be positive");
  SmoothedBoundary sb;
  sb.lambda = lambda;
  sb.n = P.n;
  sb.samples.resize(directions.size());
  parallel_for(directions.size(), jobs, [&](std::size_t k) {
    RVec d = directions[k] / directions[k].norm();
    double t = ray_crossing(P, lambda, d);
    RVec x = P.interior + t * d;
    auto s = sample_from_values(x, smoothing_values(P, lambda, x));
    s.max_u = P.max_u(x);
    sb.samples[k] = s;
  });
  return sb;
}

// Round sphere, used as a smooth oracle domain.
inline SmoothedBoundary sphere_boundary(const RVec& center, double radius, const std::vector<RVec>& directions) {
  SmoothedBoundary sb;
  sb.n = static_cast<int>(center.size());
  for (const auto& d0 : directions) {
    RVec d = d0 / d0.norm();
    BoundarySample s;
    s.x = center + radius * d;
    s.N = d;
    s.frame = detail::tangent_frame(d);
    s.dN = RMat::Identity(sb.n - 1, sb.n - 1) / radius;
    s.H = s.dN.trace();
    s.grad_norm = 1;
    sb.samples.push_back(s);
  }
  return sb;
}

// Deterministic unit directions from a seeded generator.
inline std::vector<RVec> random_directions(int n, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<RVec> out;
  for (int k = 0; k < count; ++k) {
    RVec v(n);
    for (int i = 0; i < n; ++i) v(i) = g(rng);
    out.push_back(v / v.norm());
  }
  return out;
}

// ---------------------------------------------------------------------------
// trace norms

enum class BoundaryMetric { Euclidean, Hyperbolic };

inline RVec singular_values_with_gram(const RMat& L, const RMat& G) {
  if (G.rows() != L.cols() || G.cols() != L.cols()) throw std::invalid_argument("trace norm: Gram size mismatch");
  if ((G - G.transpose()).norm() > 1e-12 * (1 + G.norm())) throw std::invalid_argument("trace norm: Gram not symmetric");
  Eigen::SelfAdjointEigenSolver<RMat> es(G);
  if (!(es.eigenvalues().minCoeff() > 0)) throw std::invalid_argument("trace norm: Gram not positive definite");
  RMat Gih = es.eigenvectors() * es.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() *
             es.eigenvectors().transpose();
  Eigen::JacobiSVD<RMat> svd(L * Gih);
  return svd.singularValues();
}

struct TraceNormSample {
  RVec q;
  double trace_norm = 0;
};

inline TraceNormSample trace_norm_dN(const BoundarySample& s, const RMat& gram) {
  TraceNormSample t;
  t.q = singular_values_with_gram(s.dN, gram);
  t.trace_norm = t.q.sum();
  return t;
}

inline TraceNormSample trace_norm_dN(const BoundarySample& s, BoundaryMetric metric) {
  const int k = static_cast<int>(s.dN.rows());
  double scale = metric == BoundaryMetric::Hyperbolic ? 1.0 / (s.x(0) * s.x(0)) : 1.0;
  if (metric == BoundaryMetric::Hyperbolic && !(s.x(0) > 0))
    throw std::domain_error("trace norm: sample outside the half-space");
  return trace_norm_dN(s, RMat(scale * RMat::Identity(k, k)));
}

inline std::vector<TraceNormSample> trace_norm_dN(const SmoothedBoundary& sb, BoundaryMetric metric) {
  std::vector<TraceNormSample> out;
  for (const auto& s : sb.samples) out.push_back(trace_norm_dN(s, metric));
  return out;
}

inline std::vector<double> smoothed_mean_curvature(const SmoothedBoundary& sb) {
  std::vector<double> H;
  for (const auto& s : sb.samples) H.push_back(s.H);
  return H;
}

struct DefectSample {
  double H_hyp = 0;        // mean curvature for (x1)^-2 delta
  double trace_hyp = 0;    // trace norm for the induced hyperbolic metric
  double defect = 0;       // H_hyp + (n-1) <d_1, N> - trace_hyp = x1 (H - trace)
  double as_printed = 0;   // H_hyp - (n-1) <d_1, N> - trace_hyp
};

inline std::vector<DefectSample> boundary_defect_hyperbolic(const SmoothedBoundary& sb) {
  std::vector<DefectSample> out;
  const int n = sb.n;
  for (const auto& s : sb.samples) {
    if (!(s.x(0) > 0)) throw std::domain_error("defect: sample outside the half-space");
    DefectSample d;
    d.H_hyp = s.x(0) * s.H - (n - 1) * s.N(0);
    d.trace_hyp = trace_norm_dN(s, BoundaryMetric::Hyperbolic).trace_norm;
    d.defect = d.H_hyp + (n - 1) * s.N(0) - d.trace_hyp;
    d.as_printed = d.H_hyp - (n - 1) * s.N(0) - d.trace_hyp;
    out.push_back(d);
  }
  return out;
}

// ---------------------------------------------------------------------------
// dihedral and matching angles

using MetricField = std::function<RMat(const RVec&)>;

struct EdgeReport {
  int i = 0, j = 0;
  double dihedral = 0;                       // Euclidean, cos = -<N_i, N_j>
  double g_cos = 0, euclid_cos = 0;          // g(nu_i, nu_j) and <N_i, N_j> at the worst sample
  double matching_residual = 0;              // max over shared-face samples
};

inline std::vector<RVec> shared_vertices(const ConvexPolytope& P, int i, int j) {
  std::vector<RVec> out;
  for (const auto& v : P.vertices)
    if (std::abs(P.u(i, v)) <= 1e-9 && std::abs(P.u(j, v)) <= 1e-9) out.push_back(v);
  return out;
}

inline bool adjacent(const ConvexPolytope& P, int i, int j) {
  if (i == j) return false;
  return detail::affine_dimension(shared_vertices(P, i, j)) >= P.n - 2;
}

inline EdgeReport dihedral_and_matching(const ConvexPolytope& P, int i, int j, const MetricField& g = nullptr) {
  const int m = static_cast<int>(P.facets.size());
  if (i < 0 || j < 0 || i >= m || j >= m) throw std::invalid_argument("dihedral: facet index out of range");
  if (P.vertices.empty()) throw std::invalid_argument("dihedral: polytope needs vertices");
  if (!adjacent(P, i, j)) throw std::invalid_argument("dihedral: facets are not adjacent");
  EdgeReport e;
  e.i = i;
  e.j = j;
  const RVec& Ni = P.facets[i].a;
  const RVec& Nj = P.facets[j].a;
  e.euclid_cos = Ni.dot(Nj);
  e.dihedral = std::acos(std::clamp(-e.euclid_cos, -1.0, 1.0));
  e.g_cos = e.euclid_cos;
  if (!g) return e;
  auto sv = shared_vertices(P, i, j);
  RVec c = RVec::Zero(P.n);
  for (const auto& v : sv) c += v;
  c /= static_cast<double>(sv.size());
  std::vector<RVec> pts{c};
  for (const auto& v : sv) pts.push_back(0.5 * (c + v));
  for (const auto& x : pts) {
    RMat ginv = g(x).inverse();
    double gij = Ni.dot(ginv * Nj) / std::sqrt(Ni.dot(ginv * Ni) * Nj.dot(ginv * Nj));
    double r = std::abs(gij - e.euclid_cos);
    if (r >= e.matching_residual) {
      e.matching_residual = r;
      e.g_cos = gij;
    }
  }
  return e;
}

inline std::vector<std::pair<int, int>> adjacent_pairs(const ConvexPolytope& P) {
  std::vector<std::pair<int, int>> out;
  const int m = static_cast<int>(P.facets.size());
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j)
      if (adjacent(P, i, j)) out.emplace_back(i, j);
  return out;
}

inline MetricField hyperbolic_metric_field(int n) {
  return [n](const RVec& x) { return RMat(RMat::Identity(n, n) / (x(0) * x(0))); };
}

// ---------------------------------------------------------------------------
// highest point

struct HighestPoint {
  RVec p0;
  std::vector<int> active;
  RVec coefficients;
  double residual = 0;         // |N0 - sum a_i N_i|
  double nu0_norm = 0;         // |sum a_i nu_i|_b with nu_i = x1 N_i
  bool unique_coefficients = true;
};

inline HighestPoint highest_point_cone(const ConvexPolytope& P) {
  if (P.vertices.empty()) throw std::invalid_argument("highest point: polytope must be bounded");
  if (!check_bounded(P).bounded) throw std::invalid_argument("highest point: unbounded in x1");
  double top = -std::numeric_limits<double>::infinity();
  for (const auto& v : P.vertices) top = std::max(top, v(0));
  HighestPoint h;
  h.p0 = RVec::Zero(P.n);
  int cnt = 0;
  for (const auto& v : P.vertices)
    if (v(0) >= top - 1e-9) {
      h.p0 += v;
      ++cnt;
    }
  h.p0 /= cnt;
  h.active = P.tight(h.p0);
  RMat M(P.n, static_cast<int>(h.active.size()));
  for (std::size_t k = 0; k < h.active.size(); ++k) M.col(static_cast<int>(k)) = P.facets[h.active[k]].a;
  RVec N0 = axis(P.n, 0);
  Eigen::CompleteOrthogonalDecomposition<RMat> cod(M);
  h.coefficients = cod.solve(N0);
  h.unique_coefficients = cod.rank() == static_cast<int>(h.active.size());
  h.residual = (M * h.coefficients - N0).norm();
  if (!(h.p0(0) > 0)) throw std::domain_error("highest point: polytope must lie in the half-space");
  RVec nu0 = h.p0(0) * (M * h.coefficients);
  h.nu0_norm = nu0.norm() / h.p0(0);
  return h;
}

// ---------------------------------------------------------------------------
// trace-norm comparison

inline RMat random_orthogonal(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  RMat Z(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) Z(i, j) = g(rng);
  Eigen::HouseholderQR<RMat> qr(Z);
  RMat Q = qr.householderQ();
  RMat R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j)
    if (R(j, j) < 0) Q.col(j) *= -1.0;
  return Q;
}

struct TraceNormComparison {
  double tn1 = 0;       // sup over orthogonal Q of tr(Q L)
  double tn2 = 0;       // sup over orthogonal Q of tr(S Q L), S = diag(mu^-1/2)
  double tn2_left = 0;  // sum of singular values of S L
  double mc_max = 0;
  bool ordered = true;  // mc_max <= tn2 + 1e-9 <= tn1 + 2e-9
};

inline TraceNormComparison trace_norm_comparison(const RMat& L, const RVec& mu, int mc_samples, std::mt19937_64& rng) {
  const int n = static_cast<int>(L.rows());
  if (L.cols() != n || mu.size() != n) throw std::invalid_argument("trace_norm_comparison: size mismatch");
  for (int i = 0; i < n; ++i)
    if (!(mu(i) >= 1.0)) throw std::invalid_argument("trace_norm_comparison: mu_i must be >= 1");
  Eigen::JacobiSVD<RMat> s1(L);
  RVec sv = s1.singularValues();
  if (!(sv(n - 1) > 1e-12 * std::max(1.0, sv(0)))) throw std::invalid_argument("trace_norm_comparison: L is singular");
  RMat S = mu.cwiseInverse().cwiseSqrt().asDiagonal();
  TraceNormComparison t;
  t.tn1 = sv.sum();
  // tr(S Q L) = tr(Q L S)
  t.tn2 = Eigen::JacobiSVD<RMat>(L * S).singularValues().sum();
  t.tn2_left = Eigen::JacobiSVD<RMat>(S * L).singularValues().sum();
  // Half of the budget draws Haar samples; the rest is a random walk on O(n)
  // started at the best Haar sample, with a step size adapted by the 1/5 rule.
  t.mc_max = -std::numeric_limits<double>::infinity();
  RMat best = RMat::Identity(n, n);
  const int haar = std::max(1, mc_samples / 2);
  for (int k = 0; k < std::min(haar, mc_samples); ++k) {
    RMat Q = random_orthogonal(n, rng);
    double v = (S * Q * L).trace();
    if (v > t.mc_max) {
      t.mc_max = v;
      best = Q;
    }
  }
  std::normal_distribution<double> g;
  double step = 0.3;
  for (int k = haar; k < mc_samples; ++k) {
    RMat Z(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) Z(i, j) = g(rng);
    RMat Kskew = step * 0.5 * (Z - Z.transpose());
    RMat I = RMat::Identity(n, n);
    RMat Q = best * (I - Kskew).inverse() * (I + Kskew);
    double v = (S * Q * L).trace();
    if (v > t.mc_max) {
      t.mc_max = v;
      best = Q;
      step *= 1.5;
    } else {
      step = std::max(step * std::pow(1.5, -0.25), 1e-8);
    }
  }
  t.ordered = t.mc_max <= t.tn2 + 1e-9 && t.tn2 <= t.tn1 + 1e-9;
  return t;
}

// ---------------------------------------------------------------------------
// convergence of the smoothing

struct ConvergenceRow {
  double lambda = 0;
  double hausdorff = 0;         // two-sided sampled estimate
  double hausdorff_inner = 0;   // max over samples of dist(x, boundary of the polytope)
  double normal_deviation = 0;  // max over facet witnesses of |N_lambda - N_l|
  double max_defect = 0;        // max |defect| over samples in the half-space, 0 otherwise
  double max_F_residual = 0;
};

struct FacetWitness {
  int facet = 0;
  RVec direction;
};

// Rays from the interior point to the centroid of each facet and to the
// midpoints between that centroid and the facet's vertices.
inline std::vector<FacetWitness> facet_witnesses(const ConvexPolytope& P) {
  std::vector<FacetWitness> out;
  for (std::size_t l = 0; l < P.facets.size(); ++l) {
    std::vector<RVec> on;
    for (const auto& v : P.vertices)
      if (std::abs(P.u(l, v)) <= 1e-9) on.push_back(v);
    RVec c = RVec::Zero(P.n);
    if (on.empty()) {
      c = P.interior - P.u(l, P.interior) * P.facets[l].a;
    } else {
      for (const auto& v : on) c += v;
      c /= static_cast<double>(on.size());
    }
    out.push_back({static_cast<int>(l), (c - P.interior).normalized()});
    for (const auto& v : on) out.push_back({static_cast<int>(l), (0.5 * (c + v) - P.interior).normalized()});
  }
  return out;
}

inline std::vector<RVec> facet_witness_directions(const ConvexPolytope& P) {
  std::vector<RVec> out;
  for (const auto& w : facet_witnesses(P)) out.push_back(w.direction);
  return out;
}

inline double polytope_ray_exit(const ConvexPolytope& P, const RVec& d) {
  double t = std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l < P.facets.size(); ++l) {
    double ad = P.facets[l].a.dot(d);
    if (ad > 0) t = std::min(t, -P.u(l, P.interior) / ad);
  }
  return t;
}

inline std::vector<ConvergenceRow> smoothing_convergence(const ConvexPolytope& P, const std::vector<double>& lambdas,
                                                         int sample_budget, std::uint64_t seed, int jobs = 1) {
  for (std::size_t k = 1; k < lambdas.size(); ++k)
    if (!(lambdas[k] > lambdas[k - 1])) throw std::invalid_argument("smoothing_convergence: lambdas must increase");
  std::vector<RVec> dirs;
  for (const auto& d : random_directions(P.n, sample_budget, seed))
    if (std::isfinite(polytope_ray_exit(P, d))) dirs.push_back(d);
  // boundary points of the polytope along the same rays, plus its vertices
  std::vector<RVec> outer;
  for (const auto& d : dirs) outer.push_back(P.interior + polytope_ray_exit(P, d) * d);
  for (const auto& v : P.vertices) outer.push_back(v);
  auto witness = facet_witnesses(P);
  auto witness_dirs = facet_witness_directions(P);
  std::vector<ConvergenceRow> rows;
  for (double lam : lambdas) {
    ConvergenceRow r;
    r.lambda = lam;
    auto sb = boundary_sample(P, lam, dirs, jobs);
    std::vector<RVec> inner;
    for (const auto& s : sb.samples) {
      r.hausdorff_inner = std::max(r.hausdorff_inner, -s.max_u);
      r.max_F_residual = std::max(r.max_F_residual, s.F_residual);
      inner.push_back(s.x);
    }
    double outer_side = 0;
    for (const auto& y : outer) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& x : inner) best = std::min(best, (x - y).norm());
      outer_side = std::max(outer_side, best);
    }
    r.hausdorff = std::max(r.hausdorff_inner, outer_side);
    auto wb = boundary_sample(P, lam, witness_dirs, jobs);
    for (std::size_t k = 0; k < witness.size(); ++k)
      r.normal_deviation =
          std::max(r.normal_deviation, (wb.samples[k].N - P.facets[witness[k].facet].a).norm());
    bool in_half_space = true;
    for (const auto& s : sb.samples) in_half_space = in_half_space && s.x(0) > 0;
    if (in_half_space)
      for (const auto& d : boundary_defect_hyperbolic(sb)) r.max_defect = std::max(r.max_defect, std::abs(d.defect));
    rows.push_back(r);
  }
  return rows;
}

}  // namespace rigidity_lab
