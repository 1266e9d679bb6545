#pragma once

#include <vector>

namespace backstep {

/// Shape-preserving cubic Hermite interpolant (Fritsch-Carlson slopes).
///
/// Interpolates tabulated data exactly at the knots and preserves
/// monotonicity of the data between them, which keeps tabulated
/// integral maps and their inverses consistent with each other.
class MonotoneCubic {
public:
    MonotoneCubic() = default;

    /// Knots must be strictly increasing; values may be any finite data.
    MonotoneCubic(std::vector<double> knots, std::vector<double> values);

    double operator()(double q) const;

    /// Evaluation with a segment hint for monotone query sequences.
    /// `segment` is updated in place; pass 0 on the first call.
    double eval(double q, int& segment) const;

    double front() const { return values_.front(); }
    double back() const { return values_.back(); }
    double knot_front() const { return knots_.front(); }
    double knot_back() const { return knots_.back(); }
    std::size_t size() const { return knots_.size(); }

private:
    int locate(double q, int hint) const;

    std::vector<double> knots_;
    std::vector<double> values_;
    std::vector<double> slopes_;
    bool uniform_ = false;
    double h_ = 0.0;  // spacing when uniform
};

}  // namespace backstep
