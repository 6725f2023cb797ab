#pragma once

// Complex polynomial potentials V(x) = sum_m c_m x^m and their text form.

#include <cctype>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "nonherm/error.hpp"
#include "nonherm/lacore.hpp"

namespace nonherm {

inline constexpr int kMaxPotentialDegree = 12;

class PolynomialPotential {
 public:
  PolynomialPotential() : coeffs_(1, Complex(0.0, 0.0)) {}

  // coeffs[m] multiplies x^m. Trailing zeros are trimmed.
  explicit PolynomialPotential(std::vector<Complex> coeffs) : coeffs_(std::move(coeffs)) {
    if (coeffs_.empty()) coeffs_.emplace_back(0.0, 0.0);
    for (const auto& c : coeffs_) {
      if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) {
        throw InputError("potential: coefficient is not finite");
      }
    }
    while (coeffs_.size() > 1 && coeffs_.back() == Complex(0.0, 0.0)) coeffs_.pop_back();
    if (degree() > kMaxPotentialDegree) {
      throw InputError("potential: degree " + std::to_string(degree()) + " exceeds " +
                       std::to_string(kMaxPotentialDegree));
    }
  }

  static PolynomialPotential monomial(Complex c, int m) {
    std::vector<Complex> v(static_cast<std::size_t>(m) + 1, Complex(0.0, 0.0));
    v.back() = c;
    return PolynomialPotential(std::move(v));
  }

  // The imaginary cubic oscillator i x^3.
  static PolynomialPotential imaginary_cubic() { return monomial(Complex(0.0, 1.0), 3); }

  const std::vector<Complex>& coefficients() const { return coeffs_; }
  int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
  Complex coefficient(int m) const {
    return m >= 0 && m <= degree() ? coeffs_[static_cast<std::size_t>(m)] : Complex(0.0, 0.0);
  }

  // Real and imaginary parts are accumulated separately so that parity
  // symmetries of the coefficients survive rounding exactly.
  Complex operator()(double x) const {
    double re = 0.0;
    double im = 0.0;
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) {
      re = re * x + it->real();
      im = im * x + it->imag();
    }
    return {re, im};
  }

  Complex derivative(double x) const {
    Complex acc(0.0, 0.0);
    for (int m = degree(); m >= 1; --m) acc = acc * x + static_cast<double>(m) * coefficient(m);
    return acc;
  }

  PolynomialPotential conjugate() const {
    std::vector<Complex> v(coeffs_);
    for (auto& c : v) c = std::conj(c);
    return PolynomialPotential(std::move(v));
  }

  // V(-x) = conj(V(x)): even coefficients real, odd coefficients imaginary.
  bool pt_symmetric() const {
    for (int m = 0; m <= degree(); ++m) {
      const Complex c = coefficient(m);
      if (m % 2 == 0 ? c.imag() != 0.0 : c.real() != 0.0) return false;
    }
    return true;
  }

  // Even top degree 2n with Re c_2n > 0 and Im c_2n > 0.
  bool davies_sectorial() const {
    const Complex top = coeffs_.back();
    return degree() > 0 && degree() % 2 == 0 && top.real() > 0.0 && top.imag() > 0.0;
  }

  bool is_monomial() const {
    for (int m = 0; m < degree(); ++m) {
      if (coefficient(m) != Complex(0.0, 0.0)) return false;
    }
    return degree() >= 1;
  }

  // Canonical text form, accepted back by parse_potential.
  std::string to_string() const {
    std::ostringstream os;
    os.precision(17);
    bool first = true;
    for (int m = 0; m <= degree(); ++m) {
      const Complex c = coefficient(m);
      if (c == Complex(0.0, 0.0)) continue;
      if (!first) os << " + ";
      first = false;
      os << '(' << c.real() << (c.imag() < 0.0 || std::signbit(c.imag()) ? "-" : "+")
         << std::abs(c.imag()) << "i)";
      if (m >= 1) os << "*x^" << m;
    }
    if (first) os << "0";
    return os.str();
  }

  friend bool operator==(const PolynomialPotential& a, const PolynomialPotential& b) {
    return a.coeffs_ == b.coeffs_;
  }

 private:
  std::vector<Complex> coeffs_;
};

namespace detail {

class PotentialParser {
 public:
  explicit PotentialParser(std::string_view text) {
    for (char ch : text) {
      if (!std::isspace(static_cast<unsigned char>(ch))) s_.push_back(ch);
    }
  }

  PolynomialPotential parse() {
    if (s_.empty()) fail("empty potential");
    std::vector<Complex> coeffs(kMaxPotentialDegree + 1, Complex(0.0, 0.0));
    bool first = true;
    while (pos_ < s_.size()) {
      double sign = 1.0;
      if (peek() == '+' || peek() == '-') {
        sign = get() == '-' ? -1.0 : 1.0;
      } else if (!first) {
        fail("expected '+' or '-'");
      }
      first = false;
      auto [c, m] = term();
      coeffs[static_cast<std::size_t>(m)] += sign * c;
    }
    return PolynomialPotential(std::move(coeffs));
  }

 private:
  std::pair<Complex, int> term() {
    Complex c(1.0, 0.0);
    bool have_coeff = false;
    if (peek() == '(') {
      c = paren_complex();
      have_coeff = true;
    } else if (is_number_start(peek())) {
      const double v = number();
      c = Complex(v, 0.0);
      have_coeff = true;
      if (peek() == 'i') {
        get();
        c = Complex(0.0, v);
      } else if (peek() == '*' && peek(1) == 'i') {
        pos_ += 2;
        c = Complex(0.0, v);
      }
    } else if (peek() == 'i') {
      get();
      c = Complex(0.0, 1.0);
      have_coeff = true;
    }
    if (have_coeff && peek() == '*') get();
    int m = 0;
    if (peek() == 'x') {
      get();
      m = 1;
      if (peek() == '^') {
        get();
        const std::size_t start = pos_;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        if (start == pos_) fail("expected integer exponent");
        m = std::stoi(s_.substr(start, pos_ - start));
      }
    } else if (!have_coeff) {
      fail("expected coefficient or 'x'");
    }
    if (m > kMaxPotentialDegree) {
      fail("exponent " + std::to_string(m) + " exceeds " + std::to_string(kMaxPotentialDegree));
    }
    return {c, m};
  }

  Complex paren_complex() {
    get();  // '('
    double sign = 1.0;
    if (peek() == '+' || peek() == '-') sign = get() == '-' ? -1.0 : 1.0;
    double re = 0.0;
    double im = 0.0;
    if (peek() == 'i') {
      get();
      im = sign;
    } else {
      const double v = sign * number();
      if (peek() == 'i') {
        get();
        im = v;
      } else {
        re = v;
        if (peek() == '+' || peek() == '-') {
          const double s2 = get() == '-' ? -1.0 : 1.0;
          if (peek() == 'i') {
            get();
            im = s2;
          } else {
            im = s2 * number();
            if (peek() == '*') get();
            if (get() != 'i') fail("expected 'i' in complex coefficient");
          }
        }
      }
    }
    if (get() != ')') fail("expected ')'");
    return {re, im};
  }

  double number() {
    const char* begin = s_.c_str() + pos_;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) fail("expected number");
    pos_ += static_cast<std::size_t>(end - begin);
    return v;
  }

  static bool is_number_start(char ch) {
    return std::isdigit(static_cast<unsigned char>(ch)) || ch == '.';
  }
  char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < s_.size() ? s_[pos_ + ahead] : '\0';
  }
  char get() { return pos_ < s_.size() ? s_[pos_++] : '\0'; }
  [[noreturn]] void fail(const std::string& msg) const {
    throw InputError("potential parse error at offset " + std::to_string(pos_) + " in '" + s_ +
                     "': " + msg);
  }

  std::string s_;
  std::size_t pos_ = 0;
};

}  // namespace detail

// Grammar: signed terms `coef*x^m`, coef one of `2.5`, `0.5i`, `i`, `(a+bi)`;
// `*` and the coefficient are optional; m <= 12. Example: "x^2 + 0.5i*x^3".
inline PolynomialPotential parse_potential(std::string_view text) {
  return detail::PotentialParser(text).parse();
}

}  // namespace nonherm
