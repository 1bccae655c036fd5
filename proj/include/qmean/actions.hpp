#pragma once

#include <algorithm>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <thread>
#include <variant>
#include <vector>

#include "qmean/core.hpp"
#include "qmean/fft.hpp"

namespace qmean {

// ---------------------------------------------------------------------------
// Group elements
// ---------------------------------------------------------------------------

/// Index shift modulo n: (g.x)[j] = x[(j + k) mod n].
struct CyclicShift {
  std::size_t k = 0;
  std::size_t n = 1;

  CyclicShift() = default;
  CyclicShift(std::size_t shift, std::size_t dimension)
      : k(dimension == 0 ? 0 : shift % dimension), n(dimension) {
    require(dimension >= 1, "cyclic shift needs dimension >= 1");
  }
  bool operator==(const CyclicShift&) const = default;
};

/// Rotation kept in implicit form: maps unit vector `from` to unit vector
/// `to`, rotating in span(from, to) and fixing the orthogonal complement.
/// This is the only rotation the registration solver ever needs, so the
/// orthogonal group is never materialized as matrices.
struct PlaneRotation {
  TemplateVector from;
  TemplateVector to;
  bool operator==(const PlaneRotation&) const = default;
};

/// Translation x -> x + v by a vector of the acting subspace V.
struct AffineTranslation {
  TemplateVector v;
  bool operator==(const AffineTranslation&) const = default;
};

struct Identity {
  bool operator==(const Identity&) const = default;
};

using GroupElement = std::variant<Identity, CyclicShift, PlaneRotation, AffineTranslation>;

inline bool is_identity(const GroupElement& g) {
  if (std::holds_alternative<Identity>(g)) return true;
  if (const auto* s = std::get_if<CyclicShift>(&g)) return s->k == 0;
  return false;
}

// ---------------------------------------------------------------------------
// Action descriptors
// ---------------------------------------------------------------------------

enum class ActionKind { cyclic_shift, rotation, affine_translation, trivial };

inline const char* to_string(ActionKind k) {
  switch (k) {
    case ActionKind::cyclic_shift: return "cyclic_shift";
    case ActionKind::rotation: return "rotation";
    case ActionKind::affine_translation: return "affine_translation";
    case ActionKind::trivial: return "trivial";
  }
  return "?";
}

/// Which concrete action a sample or an operation refers to.
struct ActionDescriptor {
  ActionKind kind = ActionKind::trivial;
  std::size_t dimension = 0;
  std::vector<TemplateVector> subspace_basis;  // affine case only, orthonormal

  bool isometric() const { return kind != ActionKind::affine_translation; }
  bool invariant() const { return true; }
  bool finite_group() const {
    return kind == ActionKind::cyclic_shift || kind == ActionKind::trivial;
  }
  std::size_t group_order() const {
    switch (kind) {
      case ActionKind::cyclic_shift: return dimension;
      case ActionKind::trivial: return 1;
      default: throw UnsupportedAction("infinite group has no order");
    }
  }

  static ActionDescriptor cyclic(std::size_t n) {
    require(n >= 1, "cyclic action needs n >= 1");
    return {ActionKind::cyclic_shift, n, {}};
  }
  static ActionDescriptor rotation(std::size_t n) {
    require(n >= 1, "rotation action needs n >= 1");
    return {ActionKind::rotation, n, {}};
  }
  static ActionDescriptor trivial(std::size_t n) {
    require(n >= 1, "trivial action needs n >= 1");
    return {ActionKind::trivial, n, {}};
  }
  static ActionDescriptor affine(std::size_t n, std::vector<TemplateVector> basis) {
    require(n >= 1, "affine action needs n >= 1");
    for (std::size_t i = 0; i < basis.size(); ++i) {
      require(basis[i].size() == n, "basis vector dimension mismatch");
      for (std::size_t j = 0; j <= i; ++j) {
        const double want = (i == j) ? 1.0 : 0.0;
        require(std::abs(inner(basis[i], basis[j]) - want) <= 1e-9,
                "subspace basis must be orthonormal");
      }
    }
    return {ActionKind::affine_translation, n, std::move(basis)};
  }
};

/// Orthogonal projection onto span(basis); basis must be orthonormal.
inline TemplateVector project_onto(const std::vector<TemplateVector>& basis,
                                   const TemplateVector& x) {
  TemplateVector p(x.size(), 0.0);
  for (const auto& b : basis) {
    const double c = inner(b, x);
    for (std::size_t j = 0; j < x.size(); ++j) p[j] += c * b[j];
  }
  return p;
}

// ---------------------------------------------------------------------------
// The action itself
// ---------------------------------------------------------------------------

namespace detail {

inline TemplateVector apply_shift(const CyclicShift& g, const TemplateVector& x) {
  require(x.size() == g.n, "shift dimension mismatch");
  TemplateVector r(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) r[j] = x[(j + g.k) % g.n];
  return r;
}

inline TemplateVector apply_rotation(const PlaneRotation& g, const TemplateVector& x) {
  require_same_dimension(g.from, x);
  require_same_dimension(g.to, x);
  const TemplateVector& u = g.from;
  const double c = inner(u, g.to);
  // v = c*u + s*w with w the unit in-plane normal of u.
  TemplateVector w = g.to - c * u;
  const double s = norm(w);
  if (s <= 1e-15) {
    if (c >= 0.0) return x;  // from == to: identity
    if (x.size() == 1) return -1.0 * x;
    // from == -to: half-turn in the plane spanned by u and a deterministic
    // companion direction (the coordinate axis least aligned with u).
    std::size_t pick = 0;
    for (std::size_t j = 1; j < u.size(); ++j)
      if (std::abs(u[j]) < std::abs(u[pick])) pick = j;
    TemplateVector e(u.size(), 0.0);
    e[pick] = 1.0;
    TemplateVector q = e - inner(e, u) * u;
    q = (1.0 / norm(q)) * q;
    TemplateVector r = x;
    const double a = inner(x, u), b = inner(x, q);
    for (std::size_t j = 0; j < x.size(); ++j) r[j] -= 2.0 * (a * u[j] + b * q[j]);
    return r;
  }
  w = (1.0 / s) * w;
  const double a = inner(x, u), b = inner(x, w);
  TemplateVector r = x;
  const double da = a * (c - 1.0) - b * s;
  const double db = a * s + b * (c - 1.0);
  for (std::size_t j = 0; j < x.size(); ++j) r[j] += da * u[j] + db * w[j];
  return r;
}

}  // namespace detail

inline TemplateVector apply(const GroupElement& g, const TemplateVector& x) {
  return std::visit(
      [&](const auto& e) -> TemplateVector {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, Identity>) {
          return x;
        } else if constexpr (std::is_same_v<T, CyclicShift>) {
          return detail::apply_shift(e, x);
        } else if constexpr (std::is_same_v<T, PlaneRotation>) {
          return detail::apply_rotation(e, x);
        } else {
          require_same_dimension(e.v, x);
          return x + e.v;
        }
      },
      g);
}

/// compose(a, b) acts as a after b: apply(compose(a,b), x) == apply(a, apply(b, x)).
/// Rotations compose only when they share the rotation plane (always true in R^2).
inline GroupElement compose(const GroupElement& a, const GroupElement& b) {
  if (std::holds_alternative<Identity>(a)) return b;
  if (std::holds_alternative<Identity>(b)) return a;
  if (const auto* sa = std::get_if<CyclicShift>(&a)) {
    const auto* sb = std::get_if<CyclicShift>(&b);
    require(sb != nullptr && sb->n == sa->n, "cannot compose mismatched elements");
    return CyclicShift(sa->k + sb->k, sa->n);
  }
  if (const auto* ta = std::get_if<AffineTranslation>(&a)) {
    const auto* tb = std::get_if<AffineTranslation>(&b);
    require(tb != nullptr, "cannot compose mismatched elements");
    return AffineTranslation{ta->v + tb->v};
  }
  const auto& ra = std::get<PlaneRotation>(a);
  const auto* rb = std::get_if<PlaneRotation>(&b);
  require(rb != nullptr, "cannot compose mismatched elements");
  // Plane rotations compose to a plane rotation only when they share the
  // rotation plane; verify that before collapsing the pair.
  const TemplateVector& u = ra.from;
  TemplateVector w = ra.to - inner(ra.from, ra.to) * ra.from;
  const double s = norm(w);
  if (s > 1e-12) {
    w = (1.0 / s) * w;
    auto in_plane = [&](const TemplateVector& z) {
      const double pu = inner(z, u), pw = inner(z, w);
      return std::abs(pu * pu + pw * pw - norm_squared(z)) <=
             1e-9 * std::max(1.0, norm_squared(z));
    };
    if (!in_plane(rb->from) || !in_plane(rb->to))
      throw UnsupportedAction("rotation composition requires a shared plane");
  }
  return PlaneRotation{rb->from, detail::apply_rotation(ra, rb->to)};
}

inline GroupElement inverse(const GroupElement& g) {
  return std::visit(
      [](const auto& e) -> GroupElement {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, Identity>) {
          return Identity{};
        } else if constexpr (std::is_same_v<T, CyclicShift>) {
          return CyclicShift(e.n - e.k, e.n);
        } else if constexpr (std::is_same_v<T, PlaneRotation>) {
          return PlaneRotation{e.to, e.from};
        } else {
          return AffineTranslation{-1.0 * e.v};
        }
      },
      g);
}

// ---------------------------------------------------------------------------
// Registration
// ---------------------------------------------------------------------------

struct RegistrationResult {
  GroupElement element;  // g* minimizing ||x - g.y||
  double distance = 0.0;
  bool unique = true;
};

namespace detail {

/// Deterministic argmax over correlations. Candidates within tie_tol of the
/// maximum count as ties; the smallest index wins. corr_second is the best
/// value over indices other than the chosen one.
struct ShiftChoice {
  std::size_t k = 0;
  double corr_best = 0.0;
  double corr_second = -std::numeric_limits<double>::infinity();
};

inline ShiftChoice choose_shift(const std::vector<double>& corr, double tie_tol) {
  ShiftChoice out;
  double cmax = corr[0];
  for (double c : corr) cmax = std::max(cmax, c);
  std::size_t pick = 0;
  while (corr[pick] < cmax - tie_tol) ++pick;
  out.k = pick;
  out.corr_best = corr[pick];
  for (std::size_t j = 0; j < corr.size(); ++j)
    if (j != pick) out.corr_second = std::max(out.corr_second, corr[j]);
  return out;
}

/// Tie tolerance on correlations equivalent to squared distances agreeing
/// within 1e-9 * max(1, |x||y|).
inline double tie_tol(double norm_x, double norm_y) {
  return 0.5e-9 * std::max(1.0, norm_x * norm_y);
}

inline double shifted_dist2(const TemplateVector& x, const TemplateVector& y, std::size_t k) {
  const std::size_t n = x.size();
  double s = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double d = x[j] - y[(j + k) % n];
    s += d * d;
  }
  return s;
}

inline RegistrationResult finish_cyclic(const TemplateVector& x, const TemplateVector& y,
                                        const ShiftChoice& choice, double nx, double ny) {
  RegistrationResult r;
  r.element = CyclicShift(choice.k, x.size());
  r.distance = std::sqrt(shifted_dist2(x, y, choice.k));
  if (x.size() == 1) {
    r.unique = true;
  } else {
    const double d2_second =
        std::max(0.0, nx * nx - 2.0 * choice.corr_second + ny * ny);
    r.unique = (std::sqrt(d2_second) - r.distance) > 1e-9 * std::max(1.0, nx);
  }
  return r;
}

}  // namespace detail

/// Exhaustive / closed-form registration of y with respect to x: the returned
/// element minimizes ||x - g.y|| over the group.
inline RegistrationResult registration(const TemplateVector& x, const TemplateVector& y,
                                       const ActionDescriptor& action) {
  require_same_dimension(x, y);
  require(x.size() == action.dimension, "action dimension mismatch");
  switch (action.kind) {
    case ActionKind::cyclic_shift: {
      std::vector<double> corr;
      detail::correlation_direct(x, y, corr);
      const double nx = norm(x), ny = norm(y);
      return detail::finish_cyclic(x, y, detail::choose_shift(corr, detail::tie_tol(nx, ny)),
                                   nx, ny);
    }
    case ActionKind::rotation: {
      const double nx = norm(x), ny = norm(y);
      if (nx == 0.0) return {Identity{}, ny, false};  // every rotation ties
      if (ny == 0.0) return {Identity{}, nx, true};
      const PlaneRotation g{(1.0 / ny) * y, (1.0 / nx) * x};
      return {g, distance(x, apply(g, y)), true};
    }
    case ActionKind::affine_translation: {
      const TemplateVector step = project_onto(action.subspace_basis, x - y);
      return {AffineTranslation{step}, distance(x, y + step), true};
    }
    case ActionKind::trivial:
      return {Identity{}, distance(x, y), true};
  }
  throw Error("unreachable");
}

/// FFT-backed registration for the cyclic action: same argmin and tie rule as
/// registration(), the correlations just come from the frequency domain.
/// Non power-of-two sizes fall back to the direct correlation.
inline RegistrationResult registration_fft(const TemplateVector& x, const TemplateVector& y) {
  require_same_dimension(x, y);
  std::vector<double> corr;
  detail::circular_correlation(x, y, corr);
  const double nx = norm(x), ny = norm(y);
  return detail::finish_cyclic(x, y, detail::choose_shift(corr, detail::tie_tol(nx, ny)), nx,
                               ny);
}

inline bool is_fixed_point(const TemplateVector& x, const ActionDescriptor& action) {
  require(x.size() == action.dimension, "action dimension mismatch");
  switch (action.kind) {
    case ActionKind::cyclic_shift:
      for (std::size_t j = 1; j < x.size(); ++j)
        if (x[j] != x[0]) return false;
      return true;
    case ActionKind::rotation:
      return norm_squared(x) == 0.0;
    case ActionKind::affine_translation:
      return action.subspace_basis.empty();
    case ActionKind::trivial:
      return true;
  }
  throw Error("unreachable");
}

/// The orbit {g.x} for finite groups, duplicates removed by exact equality
/// (first occurrence kept).
inline std::vector<TemplateVector> orbit(const TemplateVector& x,
                                         const ActionDescriptor& action) {
  require(x.size() == action.dimension, "action dimension mismatch");
  if (!action.finite_group())
    throw UnsupportedAction("orbit enumeration needs a finite group");
  std::vector<TemplateVector> out;
  for (std::size_t k = 0; k < action.group_order(); ++k) {
    TemplateVector cand =
        action.kind == ActionKind::trivial ? x : apply(CyclicShift(k, x.size()), x);
    if (std::find(out.begin(), out.end(), cand) == out.end()) out.push_back(std::move(cand));
  }
  return out;
}

/// Enumerate the group elements of a finite action.
inline std::vector<GroupElement> group_elements(const ActionDescriptor& action) {
  if (!action.finite_group()) throw UnsupportedAction("infinite group");
  std::vector<GroupElement> out;
  if (action.kind == ActionKind::trivial) {
    out.emplace_back(Identity{});
  } else {
    for (std::size_t k = 0; k < action.dimension; ++k)
      out.emplace_back(CyclicShift(k, action.dimension));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Bulk registration against a fixed sample (the max-max hot path)
// ---------------------------------------------------------------------------

namespace detail {

inline void parallel_chunks(std::size_t count, int threads,
                            const std::function<void(std::size_t, std::size_t)>& body) {
  if (threads <= 1 || count < 2) {
    body(0, count);
    return;
  }
  const std::size_t workers = std::min<std::size_t>(threads, count);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (count + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(count, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&body, lo, hi] { body(lo, hi); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace detail

/// Registers one point against many observations under the cyclic action.
/// Observation spectra are precomputed once, so each sweep costs one forward
/// transform plus an inverse transform per observation.
class CyclicRegistrar {
 public:
  explicit CyclicRegistrar(const std::vector<TemplateVector>& observations)
      : obs_(&observations) {
    require(!observations.empty(), "empty sample");
    n_ = observations.front().size();
    use_fft_ = detail::is_power_of_two(n_) && n_ > 1;
    norms_.reserve(observations.size());
    for (const auto& y : observations) {
      require(y.size() == n_, "observations must share one dimension");
      norms_.push_back(norm(y));
      if (use_fft_) spectra_.push_back(detail::dft(y));
    }
  }

  std::size_t dimension() const { return n_; }
  std::size_t count() const { return (*obs_).size(); }

  struct Hit {
    std::size_t shift = 0;
    double dist2 = 0.0;
    double corr_best = 0.0;
    double corr_second = -std::numeric_limits<double>::infinity();
  };

  /// Best shift of observation i with respect to m (per-observation result
  /// slots, deterministic for any thread count).
  void register_all(const TemplateVector& m, std::vector<Hit>& hits, int threads = 1) const {
    require(m.size() == n_, "dimension mismatch");
    hits.resize(count());
    const double nm = norm(m);
    std::vector<std::complex<double>> mspec;
    if (use_fft_) mspec = detail::dft(m);
    detail::parallel_chunks(count(), threads, [&](std::size_t lo, std::size_t hi) {
      std::vector<double> corr;
      std::vector<std::complex<double>> scratch;
      for (std::size_t i = lo; i < hi; ++i) {
        if (use_fft_) {
          detail::correlation_from_spectra(mspec, spectra_[i], scratch, corr);
        } else {
          detail::correlation_direct(m, (*obs_)[i], corr);
        }
        const auto choice =
            detail::choose_shift(corr, detail::tie_tol(nm, norms_[i]));
        hits[i] = Hit{choice.k, detail::shifted_dist2(m, (*obs_)[i], choice.k),
                      choice.corr_best, choice.corr_second};
      }
    });
  }

 private:
  const std::vector<TemplateVector>* obs_;
  std::size_t n_ = 0;
  bool use_fft_ = false;
  std::vector<double> norms_;
  std::vector<std::vector<std::complex<double>>> spectra_;
};

}  // namespace qmean
