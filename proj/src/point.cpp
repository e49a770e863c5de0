#include "greenpot/point.hpp"

#include <algorithm>
#include <cmath>

namespace greenpot {

void sym_eigen(const SymMatrix& m, std::array<double, kMaxDim>& evals, SymMatrix* evecs) {
  const int n = m.d;
  SymMatrix a = m;
  SymMatrix v = SymMatrix::identity(n);

  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30) break;

    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        if (std::fabs(a(p, q)) < 1e-300) continue;
        double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (int k = 0; k < n; ++k) {
          double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  // Sort ascending, permuting eigenvector columns alongside.
  std::array<int, kMaxDim> order{};
  for (int i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
  std::sort(order.begin(), order.begin() + n,
            [&](int i, int j) { return a(i, i) < a(j, j); });
  SymMatrix vs(n);
  for (int i = 0; i < n; ++i) {
    evals[static_cast<size_t>(i)] = a(order[static_cast<size_t>(i)], order[static_cast<size_t>(i)]);
    for (int k = 0; k < n; ++k) vs(k, i) = v(k, order[static_cast<size_t>(i)]);
  }
  if (evecs) *evecs = vs;
}

namespace {

SymMatrix rebuild(const SymMatrix& evecs, const std::array<double, kMaxDim>& diag, int n) {
  SymMatrix out(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0;
      for (int k = 0; k < n; ++k)
        s += evecs(i, k) * diag[static_cast<size_t>(k)] * evecs(j, k);
      out(i, j) = s;
    }
  return out;
}

}  // namespace

SymMatrix sym_sqrt(const SymMatrix& m) {
  std::array<double, kMaxDim> ev{};
  SymMatrix vec(m.d);
  sym_eigen(m, ev, &vec);
  for (int i = 0; i < m.d; ++i) {
    if (ev[static_cast<size_t>(i)] < 0 && ev[static_cast<size_t>(i)] > -1e-12) ev[static_cast<size_t>(i)] = 0;
    if (ev[static_cast<size_t>(i)] < 0)
      fail(ErrorCode::EllipticityViolation, "matrix square root of an indefinite matrix");
    ev[static_cast<size_t>(i)] = std::sqrt(ev[static_cast<size_t>(i)]);
  }
  return rebuild(vec, ev, m.d);
}

SymMatrix sym_inv_sqrt(const SymMatrix& m) {
  std::array<double, kMaxDim> ev{};
  SymMatrix vec(m.d);
  sym_eigen(m, ev, &vec);
  for (int i = 0; i < m.d; ++i) {
    if (ev[static_cast<size_t>(i)] <= 0)
      fail(ErrorCode::EllipticityViolation, "inverse square root of a singular matrix");
    ev[static_cast<size_t>(i)] = 1.0 / std::sqrt(ev[static_cast<size_t>(i)]);
  }
  return rebuild(vec, ev, m.d);
}

double sym_det(const SymMatrix& m) {
  std::array<double, kMaxDim> ev{};
  sym_eigen(m, ev);
  double p = 1;
  for (int i = 0; i < m.d; ++i) p *= ev[static_cast<size_t>(i)];
  return p;
}

}  // namespace greenpot
