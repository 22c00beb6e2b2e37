#pragma once

// Link-level models for the hybrid FSO/RF hop between the central node and a
// remote node: switching threshold, Gamma-Gamma turbulence with pointing
// error on the optical link, Nakagami-m fading on the RF link.
//
// All SNRs are linear. dB conversions happen only at the config boundary.

#include <cmath>
#include <limits>
#include <optional>

namespace fsorf::channel {

struct FsoParams {
    double wavelength_m = 1550e-9;
    double lo_power_W = 1e-2;
    double shot_noise_var = 5e-12;
    double responsivity_A_per_W = 0.5;
    double detector_diameter_m = 0.2;
    double tx_power_W = 0.0316227766016838;  // 15 dBm
    double divergence_rad = 2.5e-3;
    double jitter_std_m = 0.3;
    double link_distance_m = 1000.0;
    double cn2 = 5e-14;
    double weather_atten_dB_per_km = 42.2;
    double avg_symbol_energy = 1.0;

    void validate() const;
};

struct RfParams {
    double carrier_hz = 60e9;
    double bandwidth_hz = 250e6;
    double tx_power_W = 0.316227766016838;  // 25 dBm
    double tx_gain_dBi = 43.0;
    double rx_gain_dBi = 43.0;
    double noise_psd_dBm_per_MHz = -114.0;
    double noise_figure_dB = 5.0;
    double oxygen_atten_dB_per_km = 15.1;
    double rain_atten_dB_per_km = 0.0;
    double nakagami_m = 5.0;
    double link_distance_m = 1000.0;
    double avg_symbol_energy = 1.0;

    void validate() const;
};

/// Turbulence and pointing-error shape of the optical irradiance.
///
/// Only `alpha`, `beta` and `xi` enter the outage computation. The remaining
/// fields record the intermediate quantities when the shape was derived from
/// physical parameters; they are NaN when the shape was supplied directly.
struct ScintillationParams {
    double alpha = 0.0;
    double beta = 0.0;
    double xi = 0.0;
    double rytov_var = std::numeric_limits<double>::quiet_NaN();
    double d_param = std::numeric_limits<double>::quiet_NaN();
    double w_eq_m = std::numeric_limits<double>::quiet_NaN();
    double w_z_m = std::numeric_limits<double>::quiet_NaN();

    static ScintillationParams direct(double alpha, double beta, double xi);
    void validate() const;
};

struct LinkState {
    double a = 0.0;          ///< P[FSO link poor]
    double b = 0.0;          ///< P[RF link poor]
    double gamma_T = 0.0;    ///< switching threshold, linear
    double avg_snr_fso = 0.0;
    double avg_snr_rf = 0.0;

    void validate() const;
};

/// Minimum SNR for square M-QAM to meet `target_ber`:
/// (M-1) * (-2/3) * ln(5 * ber).
double switching_threshold(int modulation_order, double target_ber);

ScintillationParams scintillation(const FsoParams& fso);

double fso_avg_snr(const FsoParams& fso);

/// Free-space path loss, antenna gains and gaseous/rain attenuation folded
/// into one power gain, in dB.
double rf_channel_gain_dB(const RfParams& rf);

double rf_noise_variance_W(const RfParams& rf);

double rf_avg_snr(const RfParams& rf);

/// CDF of the FSO SNR at `gamma_T`, i.e. the probability the optical link
/// cannot carry a frame. Evaluated by nested adaptive quadrature over the
/// two Gamma factors; the pointing-error factor is integrated in closed form.
/// Throws ConvergenceError if the quadrature misses its tolerance.
double fso_outage_prob(const ScintillationParams& scint, double avg_snr, double gamma_T);

/// Regularized lower incomplete gamma P(m, m * gamma_T / avg_snr).
double rf_outage_prob(double nakagami_m, double avg_snr, double gamma_T);

/// Full physics pipeline. When `turbulence_override` is set its alpha,
/// beta and xi replace the values derived from `fso`.
LinkState evaluate_link(const FsoParams& fso,
                        const RfParams& rf,
                        int modulation_order,
                        double target_ber,
                        const std::optional<ScintillationParams>& turbulence_override = std::nullopt);

inline double db_to_linear(double dB) noexcept { return std::pow(10.0, dB / 10.0); }
inline double linear_to_db(double linear) noexcept { return 10.0 * std::log10(linear); }

}  // namespace fsorf::channel
