#include "roughvol/function_spec.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

namespace roughvol {

namespace {

std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void trim_trailing_zeros(std::vector<double>& c) {
    while (c.size() > 1 && c.back() == 0.0) c.pop_back();
}

}  // namespace

FunctionSpec::FunctionSpec() : kind_(FunctionKind::constant), coef_{0.0} {}

FunctionSpec::FunctionSpec(FunctionKind kind, std::vector<double> coefficients)
    : kind_(kind), coef_(std::move(coefficients)) {
    for (double c : coef_)
        if (!std::isfinite(c)) throw std::invalid_argument("FunctionSpec: coefficients must be finite");
    switch (kind_) {
        case FunctionKind::constant:
            if (coef_.size() != 1) throw std::invalid_argument("FunctionSpec: constant takes one coefficient");
            break;
        case FunctionKind::affine:
            if (coef_.size() != 2) throw std::invalid_argument("FunctionSpec: affine takes two coefficients");
            break;
        case FunctionKind::polynomial:
            if (coef_.empty()) throw std::invalid_argument("FunctionSpec: polynomial needs coefficients");
            break;
        case FunctionKind::exp_affine:
            if (coef_.size() != 2) throw std::invalid_argument("FunctionSpec: exp_affine takes two coefficients");
            break;
    }
}

FunctionSpec FunctionSpec::constant(double c) { return {FunctionKind::constant, {c}}; }
FunctionSpec FunctionSpec::affine(double a, double b) { return {FunctionKind::affine, {a, b}}; }
FunctionSpec FunctionSpec::polynomial(std::vector<double> c) { return {FunctionKind::polynomial, std::move(c)}; }
FunctionSpec FunctionSpec::exp_affine(double scale, double rate) { return {FunctionKind::exp_affine, {scale, rate}}; }

FunctionSpec FunctionSpec::parse(std::string_view text) {
    const auto colon = text.find(':');
    if (colon == std::string_view::npos) throw std::invalid_argument("function spec must look like KIND:c0,c1,...");
    const std::string_view name = text.substr(0, colon);
    FunctionKind kind;
    if (name == "const" || name == "constant")
        kind = FunctionKind::constant;
    else if (name == "affine")
        kind = FunctionKind::affine;
    else if (name == "poly" || name == "polynomial")
        kind = FunctionKind::polynomial;
    else if (name == "expaff" || name == "exp_affine")
        kind = FunctionKind::exp_affine;
    else
        throw std::invalid_argument("unknown function kind '" + std::string(name) + "'");
    std::vector<double> coef;
    std::string_view rest = text.substr(colon + 1);
    while (!rest.empty()) {
        const auto comma = rest.find(',');
        const std::string_view item = rest.substr(0, comma);
        double v = 0.0;
        const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
        if (res.ec != std::errc() || res.ptr != item.data() + item.size())
            throw std::invalid_argument("bad coefficient '" + std::string(item) + "' in function spec");
        coef.push_back(v);
        if (comma == std::string_view::npos) break;
        rest = rest.substr(comma + 1);
    }
    return {kind, std::move(coef)};
}

double FunctionSpec::derivative(double x, int order) const {
    if (order < 0) throw std::invalid_argument("FunctionSpec: negative derivative order");
    if (kind_ == FunctionKind::exp_affine) return coef_[0] * std::pow(coef_[1], order) * std::exp(coef_[1] * x);
    double acc = 0.0;
    for (int i = static_cast<int>(coef_.size()) - 1; i >= order; --i) {
        double fall = 1.0;
        for (int j = 0; j < order; ++j) fall *= i - j;
        acc = acc * x + fall * coef_[static_cast<std::size_t>(i)];
    }
    return acc;
}

std::vector<double> FunctionSpec::polynomial_coefficients() const {
    if (kind_ == FunctionKind::exp_affine) throw std::invalid_argument("FunctionSpec: not a polynomial");
    std::vector<double> c = coef_;
    trim_trailing_zeros(c);
    return c;
}

int FunctionSpec::degree() const {
    if (kind_ == FunctionKind::exp_affine) return -1;
    const auto c = polynomial_coefficients();
    return (c.size() == 1 && c[0] == 0.0) ? 0 : static_cast<int>(c.size()) - 1;
}

double FunctionSpec::growth() const { return kind_ == FunctionKind::exp_affine ? std::abs(coef_[1]) : 0.0; }

bool FunctionSpec::is_zero() const {
    for (double c : coef_)
        if (c != 0.0) return false;
    return true;
}

std::string FunctionSpec::to_string() const {
    std::string out;
    switch (kind_) {
        case FunctionKind::constant: out = "const:"; break;
        case FunctionKind::affine: out = "affine:"; break;
        case FunctionKind::polynomial: out = "poly:"; break;
        case FunctionKind::exp_affine: out = "expaff:"; break;
    }
    for (std::size_t i = 0; i < coef_.size(); ++i) {
        if (i) out += ',';
        out += format_number(coef_[i]);
    }
    return out;
}

}  // namespace roughvol
