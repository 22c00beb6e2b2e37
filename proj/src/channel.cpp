#include "fsorf/channel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "fsorf/error.hpp"

namespace fsorf::channel {

using detail::require;

namespace {

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }

constexpr double kSpeedOfLight = 299792458.0;

// Outage integrands are bounded in [0, 1], so an absolute error target is
// meaningful.
constexpr double kTanhSinhTol = 1e-10;
constexpr double kMaxAbsError = 1e-8;

std::string fmt_sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

// Tanh-sinh copes with the unbounded endpoint derivatives of the outage
// integrands. F may take (x) or (x, distance to the nearer endpoint).
template <class F>
double integrate(F&& f, double lo, double hi, const char* what) {
    thread_local boost::math::quadrature::tanh_sinh<double> rule;
    double err = 0.0;
    const double value = rule.integrate(f, lo, hi, kTanhSinhTol, &err);
    if (!std::isfinite(value) || !(err <= kMaxAbsError)) {
        throw ConvergenceError(std::string(what) + ": quadrature did not converge (error estimate " +
                               fmt_sci(err) + ")");
    }
    return value;
}

// Unit-mean Gamma(shape, rate = shape) quantile.
double unit_gamma_quantile(double shape, double u) {
    return boost::math::gamma_p_inv(shape, u) / shape;
}

// E[min(1, (c / Y)^s)] for Y ~ Gamma(shape, rate = shape).
double pointing_tail_expectation(double shape, double s, double c) {
    if (!(c > 0.0)) {
        return 0.0;
    }
    if (!std::isfinite(c)) {
        return 1.0;
    }
    const double bc = shape * c;
    const double below = boost::math::gamma_p(shape, bc);
    if (below >= 1.0) {
        return 1.0;
    }
    double tail = 0.0;
    if (shape > s) {
        // (bc)^s * Gamma(shape - s, bc) / Gamma(shape)
        const double q = boost::math::gamma_q(shape - s, bc);
        if (q > 0.0) {
            tail = std::exp(s * std::log(bc) + std::log(q) + std::lgamma(shape - s) -
                            std::lgamma(shape));
        }
    } else {
        // The closed form needs shape > s; integrate over the upper-tail
        // probability w = P[Y > y] instead, which keeps y accurate as w -> 0.
        const double above = boost::math::gamma_q(shape, bc);
        if (above > 0.0) {
            tail = integrate(
                [&](double w) {
                    if (!(w > 0.0)) {
                        return 0.0;
                    }
                    const double y = boost::math::gamma_q_inv(shape, std::min(w, 1.0)) / shape;
                    return y > 0.0 ? std::pow(c / y, s) : 1.0;
                },
                0.0, above, "pointing-error tail");
        }
    }
    return std::clamp(below + tail, 0.0, 1.0);
}

}  // namespace

void FsoParams::validate() const {
    require(std::isfinite(wavelength_m) && wavelength_m > 100e-9 && wavelength_m < 10e-6,
            "fso.wavelength_m must lie in (100 nm, 10 um)");
    require(finite_positive(lo_power_W), "fso.lo_power_W must be > 0");
    require(finite_positive(shot_noise_var), "fso.shot_noise_var must be > 0");
    require(finite_positive(responsivity_A_per_W), "fso.responsivity_A_per_W must be > 0");
    require(finite_positive(detector_diameter_m), "fso.detector_diameter_m must be > 0");
    require(finite_positive(tx_power_W), "fso.tx_power_W must be > 0");
    require(finite_positive(divergence_rad), "fso.divergence_rad must be > 0");
    require(finite_positive(jitter_std_m), "fso.jitter_std_m must be > 0");
    require(finite_positive(link_distance_m), "fso.link_distance_m must be > 0");
    require(finite_positive(cn2), "fso.cn2 must be > 0");
    require(std::isfinite(weather_atten_dB_per_km) && weather_atten_dB_per_km >= 0.0,
            "fso.weather_atten_dB_per_km must be >= 0");
    require(finite_positive(avg_symbol_energy), "fso.avg_symbol_energy must be > 0");
}

void RfParams::validate() const {
    require(finite_positive(carrier_hz), "rf.carrier_hz must be > 0");
    require(finite_positive(bandwidth_hz), "rf.bandwidth_hz must be > 0");
    require(finite_positive(tx_power_W), "rf.tx_power_W must be > 0");
    require(std::isfinite(tx_gain_dBi), "rf.tx_gain_dBi must be finite");
    require(std::isfinite(rx_gain_dBi), "rf.rx_gain_dBi must be finite");
    require(std::isfinite(noise_psd_dBm_per_MHz), "rf.noise_psd_dBm_per_MHz must be finite");
    require(std::isfinite(noise_figure_dB), "rf.noise_figure_dB must be finite");
    require(std::isfinite(oxygen_atten_dB_per_km) && oxygen_atten_dB_per_km >= 0.0,
            "rf.oxygen_atten_dB_per_km must be >= 0");
    require(std::isfinite(rain_atten_dB_per_km) && rain_atten_dB_per_km >= 0.0,
            "rf.rain_atten_dB_per_km must be >= 0");
    require(std::isfinite(nakagami_m) && nakagami_m >= 0.5, "rf.nakagami_m must be >= 0.5");
    require(finite_positive(link_distance_m), "rf.link_distance_m must be > 0");
    require(finite_positive(avg_symbol_energy), "rf.avg_symbol_energy must be > 0");
}

ScintillationParams ScintillationParams::direct(double alpha, double beta, double xi) {
    ScintillationParams p;
    p.alpha = alpha;
    p.beta = beta;
    p.xi = xi;
    p.validate();
    return p;
}

void ScintillationParams::validate() const {
    require(finite_positive(alpha), "turbulence alpha must be > 0");
    require(finite_positive(beta), "turbulence beta must be > 0");
    require(finite_positive(xi), "pointing-error xi must be > 0");
    require(std::isnan(rytov_var) || rytov_var >= 0.0, "Rytov variance must be >= 0");
}

void LinkState::validate() const {
    require(a >= 0.0 && a <= 1.0, "a must lie in [0, 1]");
    require(b >= 0.0 && b <= 1.0, "b must lie in [0, 1]");
    require(finite_positive(gamma_T), "gamma_T must be > 0");
}

double switching_threshold(int modulation_order, double target_ber) {
    require(modulation_order >= 4, "modulation order must be >= 4");
    int side = 1;
    while (side * side < modulation_order) {
        ++side;
    }
    require(side * side == modulation_order && (side & (side - 1)) == 0,
            "modulation order must be a power of 4 (square QAM)");
    require(target_ber > 0.0 && target_ber < 0.2, "target BER must lie in (0, 0.2)");
    return (modulation_order - 1) * (-2.0 / 3.0 * std::log(5.0 * target_ber));
}

ScintillationParams scintillation(const FsoParams& fso) {
    fso.validate();
    const double k = 2.0 * std::numbers::pi / fso.wavelength_m;
    const double z = fso.link_distance_m;
    const double D = fso.detector_diameter_m;

    ScintillationParams out;
    out.rytov_var = 0.5 * fso.cn2 * std::pow(k, 7.0 / 6.0) * std::pow(z, 11.0 / 6.0);
    out.d_param = std::sqrt(k * D * D / (4.0 * z));

    const double chi2 = out.rytov_var;
    const double d2 = out.d_param * out.d_param;
    const double chi_12_5 = std::pow(chi2, 6.0 / 5.0);

    const double alpha_arg = 0.49 * chi2 / std::pow(1.0 + 0.18 * d2 + 0.56 * chi_12_5, 7.0 / 6.0);
    const double beta_arg = 0.51 * chi2 * std::pow(1.0 + 0.69 * chi_12_5, -5.0 / 6.0) /
                            std::pow(1.0 + 0.9 * d2 + 0.62 * d2 * chi_12_5, 5.0 / 6.0);
    out.alpha = 1.0 / std::expm1(alpha_arg);
    out.beta = 1.0 / std::expm1(beta_arg);

    out.w_z_m = fso.divergence_rad * z;
    const double nu = std::sqrt(std::numbers::pi) * D / (2.0 * std::numbers::sqrt2 * out.w_z_m);
    const double w_eq2 = out.w_z_m * out.w_z_m * std::sqrt(std::numbers::pi) * std::erf(nu) /
                         (2.0 * nu * std::exp(-nu * nu));
    out.w_eq_m = std::sqrt(w_eq2);
    out.xi = out.w_eq_m / (2.0 * fso.jitter_std_m);
    return out;
}

double fso_avg_snr(const FsoParams& fso) {
    fso.validate();
    const double atten_dB = fso.weather_atten_dB_per_km * fso.link_distance_m / 1000.0;
    const double gain = db_to_linear(-atten_dB);
    return 2.0 * fso.avg_symbol_energy * fso.responsivity_A_per_W * fso.responsivity_A_per_W *
           fso.lo_power_W * fso.tx_power_W * gain / fso.shot_noise_var;
}

double rf_channel_gain_dB(const RfParams& rf) {
    rf.validate();
    const double wavelength = kSpeedOfLight / rf.carrier_hz;
    const double fspl_dB =
        20.0 * std::log10(4.0 * std::numbers::pi * rf.link_distance_m / wavelength);
    const double gas_dB =
        (rf.oxygen_atten_dB_per_km + rf.rain_atten_dB_per_km) * rf.link_distance_m / 1000.0;
    return rf.tx_gain_dBi + rf.rx_gain_dBi - fspl_dB - gas_dB;
}

double rf_noise_variance_W(const RfParams& rf) {
    rf.validate();
    const double n0_W_per_Hz = db_to_linear(rf.noise_psd_dBm_per_MHz) * 1e-3 / 1e6;
    return rf.bandwidth_hz * n0_W_per_Hz * db_to_linear(rf.noise_figure_dB);
}

double rf_avg_snr(const RfParams& rf) {
    return rf.avg_symbol_energy * rf.tx_power_W * db_to_linear(rf_channel_gain_dB(rf)) /
           rf_noise_variance_W(rf);
}

double fso_outage_prob(const ScintillationParams& scint, double avg_snr, double gamma_T) {
    scint.validate();
    require(finite_positive(avg_snr), "average FSO SNR must be > 0");
    require(std::isfinite(gamma_T) && gamma_T >= 0.0, "gamma_T must be >= 0");
    if (gamma_T == 0.0) {
        return 0.0;
    }

    // a = E_{X,Y}[min(1, (z0 / (X Y))^{xi^2})] with X, Y unit-mean Gamma.
    // The outer expectation runs over the smaller shape in quantile space; the
    // inner one uses the larger shape, for which the closed form usually holds.
    const double xi2 = scint.xi * scint.xi;
    const double z0 = xi2 * gamma_T / ((xi2 + 1.0) * avg_snr);
    const double outer_shape = std::min(scint.alpha, scint.beta);
    const double inner_shape = std::max(scint.alpha, scint.beta);

    // The integrand decays like (-ln(1 - u))^{-xi^2} as u -> 1; the distance
    // to the endpoint keeps the quantile accurate there.
    const auto outer = [&](double u, double uc) {
        // uc is 1 - u on the upper half of the interval and -u on the lower.
        if (uc <= 0.0 && u <= 0.0) {
            return 1.0;
        }
        const double x = uc > 0.0 ? boost::math::gamma_q_inv(outer_shape, uc) / outer_shape
                                  : unit_gamma_quantile(outer_shape, -uc);
        if (!(x > 0.0)) {
            return 1.0;
        }
        if (!std::isfinite(x)) {
            return 0.0;
        }
        return pointing_tail_expectation(inner_shape, xi2, z0 / x);
    };
    const double a = integrate(outer, 0.0, 1.0, "FSO outage");
    return std::clamp(a, 0.0, 1.0);
}

double rf_outage_prob(double nakagami_m, double avg_snr, double gamma_T) {
    require(std::isfinite(nakagami_m) && nakagami_m >= 0.5, "Nakagami m must be >= 0.5");
    require(finite_positive(avg_snr), "average RF SNR must be > 0");
    require(!std::isnan(gamma_T) && gamma_T >= 0.0, "gamma_T must be >= 0");
    if (std::isinf(gamma_T)) {
        return 1.0;
    }
    return std::clamp(boost::math::gamma_p(nakagami_m, nakagami_m * gamma_T / avg_snr), 0.0, 1.0);
}

LinkState evaluate_link(const FsoParams& fso,
                        const RfParams& rf,
                        int modulation_order,
                        double target_ber,
                        const std::optional<ScintillationParams>& turbulence_override) {
    LinkState link;
    link.gamma_T = switching_threshold(modulation_order, target_ber);
    link.avg_snr_fso = fso_avg_snr(fso);
    link.avg_snr_rf = rf_avg_snr(rf);
    const ScintillationParams scint = turbulence_override ? *turbulence_override : scintillation(fso);
    link.a = fso_outage_prob(scint, link.avg_snr_fso, link.gamma_T);
    link.b = rf_outage_prob(rf.nakagami_m, link.avg_snr_rf, link.gamma_T);
    return link;
}

}  // namespace fsorf::channel
