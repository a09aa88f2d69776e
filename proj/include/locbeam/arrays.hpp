#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <stdexcept>

namespace locbeam {

using cxd = std::complex<double>;

// Uniform linear array description. Spacing is in wavelengths (d/lambda);
// half-wavelength spacing is the usual assumption.
struct ArrayConfig {
    int n_elements = 1;
    double spacing_wavelengths = 0.5;

    void validate() const {
        if (n_elements < 1)
            throw std::invalid_argument("ArrayConfig: n_elements must be >= 1");
        if (!(spacing_wavelengths > 0.0) || spacing_wavelengths > 1.0)
            throw std::invalid_argument(
                "ArrayConfig: spacing_wavelengths must be in (0, 1]");
    }
};

using SteeringVector = Eigen::VectorXcd;

inline double wrap_angle(double theta) {
    double t = std::fmod(theta, 2.0 * M_PI);
    if (t < 0.0) t += 2.0 * M_PI;
    return t;
}

// Azimuth array response of a ULA: entry k = exp(j k 2 pi d/lambda sin(theta)).
// Entry 0 is exactly 1; 2-D (azimuth-only) beamforming throughout.
inline SteeringVector array_response(double angle, const ArrayConfig& cfg) {
    cfg.validate();
    const double theta = wrap_angle(angle);
    const double step = 2.0 * M_PI * cfg.spacing_wavelengths * std::sin(theta);
    SteeringVector v(cfg.n_elements);
    for (int k = 0; k < cfg.n_elements; ++k)
        v[k] = std::polar(1.0, step * static_cast<double>(k));
    v[0] = cxd(1.0, 0.0);
    return v;
}

// Response on the sin(theta) axis directly. The phase progression of a ULA
// depends on the angle only through sin(theta), so beam synthesis and
// steering-vector identity questions live naturally on this axis.
inline SteeringVector array_response_sin(double s, const ArrayConfig& cfg) {
    const double step = 2.0 * M_PI * cfg.spacing_wavelengths * s;
    SteeringVector v(cfg.n_elements);
    for (int k = 0; k < cfg.n_elements; ++k)
        v[k] = std::polar(1.0, step * static_cast<double>(k));
    v[0] = cxd(1.0, 0.0);
    return v;
}

struct Codebook {
    enum class Kind { quantized_eq1, designed_eq17 };

    Eigen::MatrixXcd weights;  // rows = antenna elements, cols = beams
    double beamwidth_deg = 5.0;
    Kind kind = Kind::quantized_eq1;

    int n_elements() const { return static_cast<int>(weights.rows()); }
    int n_beams() const { return static_cast<int>(weights.cols()); }
};

// IEEE 802.15.3c style 2-bit phase codebook:
//   W(n,b) = j^floor(n * mod(b + B/2, B) / (B/4)),
// evaluated in exact integer arithmetic as floor(4 n m / B), then columns
// normalized to unit power. B must be even so the B/2 shift is integral.
inline Codebook quantized_codebook(int n_elements, int n_beams) {
    if (n_elements < 1)
        throw std::invalid_argument("quantized_codebook: n_elements must be >= 1");
    if (n_beams < 1 || n_beams % 2 != 0)
        throw std::invalid_argument("quantized_codebook: n_beams must be even");

    static const cxd j_pow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    Codebook cb;
    cb.kind = Codebook::Kind::quantized_eq1;
    cb.beamwidth_deg = 360.0 / static_cast<double>(n_beams);
    cb.weights.resize(n_elements, n_beams);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n_elements));
    for (int b = 0; b < n_beams; ++b) {
        const long long m = (b + n_beams / 2) % n_beams;
        for (int n = 0; n < n_elements; ++n) {
            const long long e = (4LL * n * m) / n_beams;  // floor, exact
            cb.weights(n, b) = j_pow[e % 4] * scale;
        }
    }
    return cb;
}

// Projection of a beam onto the array response at `angle`, w^H p(theta).
// Conjugate-linear in the weights, matching the W^H usage of the received
// signal model.
inline cxd beam_gain(const Eigen::VectorXcd& weights, double angle,
                     const ArrayConfig& cfg) {
    if (weights.size() != cfg.n_elements)
        throw std::invalid_argument("beam_gain: weight length != n_elements");
    return weights.dot(array_response(angle, cfg));  // Eigen dot conjugates lhs
}

}  // namespace locbeam
