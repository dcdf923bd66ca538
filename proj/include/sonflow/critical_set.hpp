#pragma once

// Critical components F_k = { Theta symmetric in SO(n), tr Theta = n - 4k }.

#include <cstdint>
#include <optional>
#include <vector>

#include "sonflow/manifold.hpp"

namespace sonflow {

inline constexpr double kDefaultClassifyTol = 1e-8;

/// A critical point Theta0 = frame^T * diag(signs) * frame with exactly 2k
/// entries of signs equal to -1. The frame always has det +1.
struct CriticalPointInfo {
  RotationMatrix theta;
  int k = 0;
  Matrix frame;
  Vector signs;

  int dim() const { return theta.dim(); }
};

/// Builds the point of F_k with D = diag(-1 (2k times), 1, ...) in the given
/// orthogonal frame. Throws Error(BadIndex) for k outside [0, n/2].
CriticalPointInfo make_critical(int n, int k, const Matrix& frame);
/// Same with a Haar-sampled frame.
CriticalPointInfo make_critical(int n, int k, std::uint64_t seed);

/// Component index of Theta, or nullopt when Theta is not critical at tol.
/// Throws Error(AmbiguousTrace) when the trace is far from every n - 4k.
std::optional<int> classify(const RotationMatrix& theta, double tol = kDefaultClassifyTol);

/// 2k(n - 2k). Throws Error(BadIndex) for invalid k.
int component_dimension(int n, int k);

/// ||Theta - Theta^T||_F + |tr Theta - (n - 4k)|.
double membership_residual(const Matrix& theta, int k);

/// Samples of the curve
///   t -> exp(W1^T (1-t)) exp(W2^T t) D exp(W2 t) exp(W1 (1-t)),
/// W_i = log(frame_i), at steps + 1 uniform parameters in [0, 1].
/// Throws Error(ComponentMismatch) when a.k != b.k.
std::vector<RotationMatrix> connect_in_component(const CriticalPointInfo& a,
                                                 const CriticalPointInfo& b, int steps);

/// Orthogonal projector, in skew coordinates, onto { Omega : Omega Theta0 symmetric }.
Matrix tangent_projector_at(const CriticalPointInfo& info);

}  // namespace sonflow
