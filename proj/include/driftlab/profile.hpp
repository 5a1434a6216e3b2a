#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "driftlab/expr.hpp"

namespace driftlab {

/// A scalar function of the radial variable r with exact symbolic
/// derivatives. Profiles hold the warp psi, the potential phi, analytic test
/// fields and coefficient shapes.
class RadialProfile {
public:
    RadialProfile() { *this = constant(0.0); }

    explicit RadialProfile(const std::string& expr_text)
        : source_(expr_text), value_(parse_expression(expr_text, {"r"})) {
        d_.push_back(value_.derivative("r"));
        d_.push_back(d_[0].derivative("r"));
    }

    static RadialProfile constant(double c) {
        RadialProfile p(std::to_string(c));
        return p;
    }

    double operator()(double r) const { return value_(r); }
    double d1(double r) const { return d_[0](r); }
    double d2(double r) const { return d_[1](r); }

    /// k-th derivative; trees beyond the second are derived on demand.
    double deriv(int k, double r) const {
        if (k == 0) return value_(r);
        while (static_cast<int>(d_.size()) < k)
            d_.push_back(d_.back().derivative("r"));
        return d_[static_cast<size_t>(k) - 1](r);
    }

    const std::string& source() const { return source_; }
    bool is_constant() const { return value_.constant(); }

private:
    std::string source_;
    Expression value_;
    mutable std::vector<Expression> d_;
};

namespace detail {

// Recognises "name" or "name[number]" preset syntax.
inline bool parse_preset_name(const std::string& s, std::string& name, double& param,
                              bool& has_param) {
    auto lb = s.find('[');
    if (lb == std::string::npos) {
        name = s;
        has_param = false;
        return true;
    }
    if (s.back() != ']') return false;
    name = s.substr(0, lb);
    try {
        size_t used = 0;
        param = std::stod(s.substr(lb + 1, s.size() - lb - 2), &used);
        if (used != s.size() - lb - 2) return false;
    } catch (const std::exception&) {
        return false;
    }
    has_param = true;
    return true;
}

inline std::string num(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace detail

/// Expands the named warp presets; anything else is parsed as an expression
/// in r. Presets:
///   euclidean      psi = r
///   hyperbolic[k]  psi = sinh(sqrt(k) r)/sqrt(k)
///   sphere[k]      psi = sin(sqrt(k) r)/sqrt(k)
inline RadialProfile make_warp_profile(const std::string& spec) {
    std::string name;
    double param = 1.0;
    bool has_param = false;
    if (detail::parse_preset_name(spec, name, param, has_param)) {
        if (name == "euclidean")
            return RadialProfile("r");
        if (name == "hyperbolic") {
            double k = has_param ? param : 1.0;
            if (k <= 0) throw ParseError("hyperbolic[k] needs k > 0, got " + spec);
            double sk = std::sqrt(k);
            return RadialProfile("sinh(" + detail::num(sk) + "*r)/" + detail::num(sk));
        }
        if (name == "sphere") {
            double k = has_param ? param : 1.0;
            if (k <= 0) throw ParseError("sphere[k] needs k > 0, got " + spec);
            double sk = std::sqrt(k);
            return RadialProfile("sin(" + detail::num(sk) + "*r)/" + detail::num(sk));
        }
    }
    return RadialProfile(spec);
}

/// Potential presets:
///   zero           phi = 0
///   gaussian[a]    phi = a r^2/2
inline RadialProfile make_potential_profile(const std::string& spec) {
    std::string name;
    double param = 1.0;
    bool has_param = false;
    if (detail::parse_preset_name(spec, name, param, has_param)) {
        if (name == "zero")
            return RadialProfile::constant(0.0);
        if (name == "gaussian") {
            double a = has_param ? param : 1.0;
            return RadialProfile(detail::num(a / 2.0) + "*r^2");
        }
    }
    return RadialProfile(spec);
}

} // namespace driftlab
