#pragma once

#include "fnlslab/field.hpp"

namespace fnls {

// Full trilinear convolution F(u1,u2,u3)(n4) = sum over n1 - n2 + n3 = n4 of
// u1(n1) conj(u2(n2)) u3(n3), i.e. the spectral form of u1 * conj(u2) * u3.
// Computed alias-free through zero-padded transforms of length grid.fft_len().
// The returned field carries every exactly-computed mode:
// n_grid = min(3N, fft_len - 3N - 1) with N = grid.n_trunc (always >= N).
FourierField full_cubic(const FourierField& u1, const FourierField& u2,
                        const FourierField& u3, const GridSpec& grid);

// Non-resonant trilinear part: coefficient at n4 sums u1(n1) conj(u2(n2)) u3(n3)
// over n1 - n2 + n3 = n4 restricted to n2 not in {n1, n3}. Fast path: take the
// full convolution and subtract the two resonant strata
//   n2 = n1:  <u1, u2> u3      n2 = n3:  <u3, u2> u1
// adding back the doubly-removed stratum n1 = n2 = n3 (the pointwise product).
FourierField nonres_trilinear(const FourierField& u1, const FourierField& u2,
                              const FourierField& u3, const GridSpec& grid);

// O(N^3) direct sum over the constrained lattice; the oracle for the fast
// path. exclude_first selects the equivalent-on-the-hyperplane formulation
// {n1 not in {n2, n4}} instead of the standard {n2 not in {n1, n3}}.
FourierField nonres_trilinear_direct(const FourierField& u1,
                                     const FourierField& u2,
                                     const FourierField& u3,
                                     const GridSpec& grid,
                                     bool exclude_first = false);

// Resonant part: coefficient at n is -u1(n) conj(u2(n)) u3(n).
FourierField resonant_trilinear(const FourierField& u1, const FourierField& u2,
                                const FourierField& u3);

// Equal-arguments renormalized cubic, projected to |n| <= grid.n_trunc:
//   N(u,u,u) + R(u,u,u) = F(u,u,u) - 2 mass(u) u
// (the resonant strata of F are <u,u> u3 + <u,u> u1 - diag = 2 M u - R).
// This is the flow's nonlinearity and skips the pairing bookkeeping.
FourierField renormalized_cubic(const FourierField& u, const GridSpec& grid);

}  // namespace fnls
