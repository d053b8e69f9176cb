#pragma once

// Truncated multivariate Taylor arithmetic in three variables.
//
// A Taylor<N> carries the coefficients c_a = (d^a f)(x0) / a! for every
// multi-index a with |a| <= N.  Arithmetic propagates them exactly, so a
// function written once as a template over its scalar type yields its
// value, gradient, Hessian and third derivatives by evaluating it at
// Taylor<N>::variable(x0, k).

#include <array>
#include <cmath>
#include <cstddef>

#include <Eigen/Dense>

namespace wulffstab {

namespace detail {

constexpr std::size_t taylor_size(int order) {
  std::size_t n = 0;
  for (int d = 0; d <= order; ++d) n += static_cast<std::size_t>((d + 1) * (d + 2) / 2);
  return n;
}

struct MultiIndex {
  int e[3];
  constexpr int degree() const { return e[0] + e[1] + e[2]; }
};

template <int N>
struct TaylorTables {
  static constexpr std::size_t size = taylor_size(N);
  std::array<MultiIndex, size> index{};
  // product table: for every pair (a, b) with |a|+|b| <= N, the slot of a+b
  std::array<std::array<int, size>, size> sum{};

  constexpr TaylorTables() {
    std::size_t k = 0;
    for (int d = 0; d <= N; ++d)
      for (int i = d; i >= 0; --i)
        for (int j = d - i; j >= 0; --j) index[k++] = MultiIndex{{i, j, d - i - j}};
    for (std::size_t a = 0; a < size; ++a)
      for (std::size_t b = 0; b < size; ++b) {
        sum[a][b] = -1;
        MultiIndex s{{index[a].e[0] + index[b].e[0], index[a].e[1] + index[b].e[1],
                      index[a].e[2] + index[b].e[2]}};
        if (s.degree() > N) continue;
        for (std::size_t c = 0; c < size; ++c)
          if (index[c].e[0] == s.e[0] && index[c].e[1] == s.e[1] && index[c].e[2] == s.e[2])
            sum[a][b] = static_cast<int>(c);
      }
  }

  constexpr int slot(int i, int j, int l) const {
    for (std::size_t c = 0; c < size; ++c)
      if (index[c].e[0] == i && index[c].e[1] == j && index[c].e[2] == l) return static_cast<int>(c);
    return -1;
  }
};

template <int N>
inline constexpr TaylorTables<N> taylor_tables{};

}  // namespace detail

template <int N>
class Taylor {
 public:
  static constexpr std::size_t size = detail::taylor_size(N);

  Taylor() { c_.fill(0.0); }
  Taylor(double v) {  // NOLINT(google-explicit-constructor)
    c_.fill(0.0);
    c_[0] = v;
  }

  static Taylor variable(double value, int k) {
    Taylor t(value);
    if constexpr (N >= 1) t.c_[1 + k] = 1.0;
    return t;
  }

  double value() const { return c_[0]; }
  double coeff(std::size_t i) const { return c_[i]; }
  double& coeff(std::size_t i) { return c_[i]; }

  double d1(int k) const {
    static_assert(N >= 1);
    return c_[1 + k];
  }
  double d2(int i, int j) const {
    static_assert(N >= 2);
    int e[3] = {0, 0, 0};
    ++e[i];
    ++e[j];
    return c_[detail::taylor_tables<N>.slot(e[0], e[1], e[2])] * (i == j ? 2.0 : 1.0);
  }
  double d3(int i, int j, int k) const {
    static_assert(N >= 3);
    int e[3] = {0, 0, 0};
    ++e[i];
    ++e[j];
    ++e[k];
    double fact = 1.0;
    for (int m = 0; m < 3; ++m)
      for (int f = 2; f <= e[m]; ++f) fact *= f;
    return c_[detail::taylor_tables<N>.slot(e[0], e[1], e[2])] * fact;
  }

  Eigen::Vector3d gradient() const { return {d1(0), d1(1), d1(2)}; }
  Eigen::Matrix3d hessian() const {
    Eigen::Matrix3d h;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) h(i, j) = d2(i, j);
    return h;
  }
  // T[a, b] = sum_k d3(i, j, k) a_i b_j e_k
  Eigen::Vector3d third(const Eigen::Vector3d& a, const Eigen::Vector3d& b) const {
    Eigen::Vector3d out = Eigen::Vector3d::Zero();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) out[k] += d3(i, j, k) * a[i] * b[j];
    return out;
  }

  Taylor& operator+=(const Taylor& o) {
    for (std::size_t i = 0; i < size; ++i) c_[i] += o.c_[i];
    return *this;
  }
  Taylor& operator-=(const Taylor& o) {
    for (std::size_t i = 0; i < size; ++i) c_[i] -= o.c_[i];
    return *this;
  }
  Taylor& operator*=(double s) {
    for (auto& v : c_) v *= s;
    return *this;
  }
  Taylor& operator*=(const Taylor& o) { return *this = *this * o; }
  Taylor& operator/=(const Taylor& o) { return *this = *this / o; }

  friend Taylor operator+(Taylor a, const Taylor& b) { return a += b; }
  friend Taylor operator-(Taylor a, const Taylor& b) { return a -= b; }
  friend Taylor operator-(Taylor a) { return a *= -1.0; }
  friend Taylor operator*(Taylor a, double s) { return a *= s; }
  friend Taylor operator*(double s, Taylor a) { return a *= s; }
  friend Taylor operator+(Taylor a, double s) {
    a.c_[0] += s;
    return a;
  }
  friend Taylor operator+(double s, Taylor a) { return a + s; }
  friend Taylor operator-(Taylor a, double s) {
    a.c_[0] -= s;
    return a;
  }
  friend Taylor operator-(double s, const Taylor& a) { return -a + s; }
  friend Taylor operator/(Taylor a, double s) { return a *= 1.0 / s; }

  friend Taylor operator*(const Taylor& a, const Taylor& b) {
    const auto& tab = detail::taylor_tables<N>;
    Taylor r;
    for (std::size_t i = 0; i < size; ++i) {
      if (a.c_[i] == 0.0) continue;
      for (std::size_t j = 0; j < size; ++j) {
        const int s = tab.sum[i][j];
        if (s >= 0) r.c_[static_cast<std::size_t>(s)] += a.c_[i] * b.c_[j];
      }
    }
    return r;
  }

  // f(a0 + d) = sum_k derivs[k] / k! d^k, d with zero constant term
  template <class Derivs>
  static Taylor compose(const Taylor& a, const Derivs& derivs) {
    Taylor d = a;
    d.c_[0] = 0.0;
    Taylor result(derivs[0]);
    Taylor power(1.0);
    double fact = 1.0;
    for (int k = 1; k <= N; ++k) {
      power = power * d;
      fact *= k;
      result += power * (derivs[k] / fact);
    }
    return result;
  }

  friend Taylor operator/(const Taylor& a, const Taylor& b) { return a * reciprocal(b); }
  friend Taylor operator/(double s, const Taylor& b) { return reciprocal(b) * s; }

  friend Taylor reciprocal(const Taylor& b) {
    const double x = b.c_[0];
    std::array<double, N + 1> d{};
    double v = 1.0 / x;
    for (int k = 0; k <= N; ++k) {
      d[k] = v;
      v *= -(k + 1) / x;
    }
    return compose(b, d);
  }

  friend Taylor pow(const Taylor& b, double e) {
    const double x = b.c_[0];
    std::array<double, N + 1> d{};
    double coef = 1.0;
    for (int k = 0; k <= N; ++k) {
      d[k] = coef * std::pow(x, e - k);
      coef *= (e - k);
    }
    return compose(b, d);
  }

  friend Taylor sqrt(const Taylor& b) { return pow(b, 0.5); }

  friend Taylor exp(const Taylor& b) {
    std::array<double, N + 1> d{};
    d.fill(std::exp(b.c_[0]));
    return compose(b, d);
  }

  friend Taylor log(const Taylor& b) {
    const double x = b.c_[0];
    std::array<double, N + 1> d{};
    d[0] = std::log(x);
    double v = 1.0 / x;
    for (int k = 1; k <= N; ++k) {
      d[k] = v;
      v *= -k / x;
    }
    return compose(b, d);
  }

 private:
  std::array<double, size> c_;
};

using Jet1 = Taylor<1>;
using Jet2 = Taylor<2>;
using Jet3 = Taylor<3>;

inline double value_of(double x) { return x; }
template <int N>
double value_of(const Taylor<N>& x) {
  return x.value();
}

template <class T>
std::array<T, 3> seed_point(const Eigen::Vector3d& x) {
  if constexpr (std::is_same_v<T, double>) {
    return {x[0], x[1], x[2]};
  } else {
    return {T::variable(x[0], 0), T::variable(x[1], 1), T::variable(x[2], 2)};
  }
}

}  // namespace wulffstab
