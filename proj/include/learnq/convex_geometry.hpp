#pragma once

// Closed convex target sets with closed-form Euclidean projections, and the
// supporting half-space used to steer a running average toward the set.

#include <Eigen/Core>

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>

namespace learnq {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline void require_dim(Eigen::Index got, Eigen::Index want, const char* where) {
  if (got != want) {
    throw DimensionMismatch(std::string(where) + ": dimension " + std::to_string(got) +
                            " does not match " + std::to_string(want));
  }
}

template <typename Scalar>
struct Singleton {
  VectorX<Scalar> point;
};

/// {r : normal . r <= offset}
template <typename Scalar>
struct HalfSpace {
  VectorX<Scalar> normal;
  Scalar offset;
};

struct NonpositiveOrthant {
  Eigen::Index dim;
};

template <typename Scalar>
struct Box {
  VectorX<Scalar> lo;
  VectorX<Scalar> hi;
};

template <typename Scalar>
class TargetSet {
 public:
  using Shape = std::variant<Singleton<Scalar>, HalfSpace<Scalar>, NonpositiveOrthant, Box<Scalar>>;

  static TargetSet singleton(VectorX<Scalar> point) { return TargetSet(Singleton<Scalar>{std::move(point)}); }

  static TargetSet half_space(VectorX<Scalar> normal, Scalar offset) {
    if (normal.size() == 0 || normal.isZero(0)) throw std::invalid_argument("half_space: zero normal");
    return TargetSet(HalfSpace<Scalar>{std::move(normal), offset});
  }

  static TargetSet nonpositive_orthant(Eigen::Index dim) {
    if (dim < 1) throw std::invalid_argument("nonpositive_orthant: dim must be >= 1");
    return TargetSet(NonpositiveOrthant{dim});
  }

  static TargetSet box(VectorX<Scalar> lo, VectorX<Scalar> hi) {
    require_dim(hi.size(), lo.size(), "box");
    if ((lo.array() > hi.array()).any()) throw std::invalid_argument("box: lo > hi");
    return TargetSet(Box<Scalar>{std::move(lo), std::move(hi)});
  }

  Eigen::Index dim() const {
    return std::visit(
        [](const auto& s) -> Eigen::Index {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, Singleton<Scalar>>) return s.point.size();
          else if constexpr (std::is_same_v<S, HalfSpace<Scalar>>) return s.normal.size();
          else if constexpr (std::is_same_v<S, NonpositiveOrthant>) return s.dim;
          else return s.lo.size();
        },
        shape_);
  }

  const Shape& shape() const { return shape_; }

 private:
  explicit TargetSet(Shape shape) : shape_(std::move(shape)) {}
  Shape shape_;
};

using TargetSetd = TargetSet<double>;

template <typename Scalar>
struct Projection {
  VectorX<Scalar> point;
  Scalar distance;
};

template <typename Derived>
Projection<typename Derived::Scalar> project(const Eigen::MatrixBase<Derived>& x,
                                             const TargetSet<typename Derived::Scalar>& z) {
  using Scalar = typename Derived::Scalar;
  require_dim(x.size(), z.dim(), "project");
  VectorX<Scalar> p = std::visit(
      [&](const auto& s) -> VectorX<Scalar> {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Singleton<Scalar>>) {
          return s.point;
        } else if constexpr (std::is_same_v<S, HalfSpace<Scalar>>) {
          const Scalar excess = s.normal.dot(x) - s.offset;
          if (excess <= Scalar(0)) return x;
          return x - (excess / s.normal.squaredNorm()) * s.normal;
        } else if constexpr (std::is_same_v<S, NonpositiveOrthant>) {
          return x.cwiseMin(Scalar(0));
        } else {
          return x.cwiseMax(s.lo).cwiseMin(s.hi);
        }
      },
      z.shape());
  const Scalar dist = (x - p).norm();
  return {std::move(p), dist};
}

template <typename Derived>
bool contains(const TargetSet<typename Derived::Scalar>& z, const Eigen::MatrixBase<Derived>& x,
              typename Derived::Scalar tol = 1e-12) {
  return project(x, z).distance <= tol;
}

/// {r : normal . r <= offset}; contains the target set it was built from.
template <typename Scalar>
struct Hyperplane {
  VectorX<Scalar> normal;
  Scalar offset;
};

/// Points closer than this to the target set count as inside.
inline constexpr double kInsideTolerance = 1e-12;

/// Separating half-space through the projection of `qbar`; nullopt when `qbar` is in the set.
template <typename Derived>
std::optional<Hyperplane<typename Derived::Scalar>> supporting_halfspace(
    const Eigen::MatrixBase<Derived>& qbar, const TargetSet<typename Derived::Scalar>& z) {
  using Scalar = typename Derived::Scalar;
  auto proj = project(qbar, z);
  if (proj.distance < Scalar(kInsideTolerance)) return std::nullopt;
  VectorX<Scalar> normal = qbar - proj.point;
  const Scalar offset = proj.point.dot(normal);
  return Hyperplane<Scalar>{std::move(normal), offset};
}

}  // namespace learnq
