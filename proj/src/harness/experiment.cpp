#include "thermotwin/harness/experiment.hpp"

#include <cmath>
#include <string>

#include <spdlog/spdlog.h>

#include "thermotwin/core/errors.hpp"
#include "thermotwin/core/signal.hpp"

namespace thermotwin {

namespace {

constexpr Channel noisy_channels[] = {Channel::m_ghx,     Channel::q_ghx, Channel::m_tes_in, Channel::t_tes_out,
                                      Channel::t_top,     Channel::t_mid, Channel::t_bot};

void require_scale(double v, const char* name) {
    require(std::isfinite(v) && v > 0.0, ErrorKind::parameter, std::string("perturbation: ") + name + " must be > 0");
}

}  // namespace

void Perturbation::validate() const {
    require_scale(h_c_scale, "h_c_scale");
    require_scale(porosity_scale, "porosity_scale");
    require_scale(effectiveness_scale, "effectiveness_scale");
}

GeneratorConfig Perturbation::apply(const GeneratorConfig& base) const {
    validate();
    GeneratorConfig g = base;
    g.bed.h_c *= h_c_scale;
    g.bed.porosity *= porosity_scale;
    g.ghx.effectiveness *= effectiveness_scale;
    require(g.bed.porosity > 0.0 && g.bed.porosity < 1.0, ErrorKind::parameter,
            "perturbation: porosity leaves (0, 1)");
    require(g.ghx.effectiveness > 0.0 && g.ghx.effectiveness <= 1.0, ErrorKind::parameter,
            "perturbation: effectiveness leaves (0, 1]");
    g.bed.validate();
    g.ghx.validate();
    return g;
}

double NoiseSpec::sigma(Channel c) const {
    switch (c) {
        case Channel::m_ghx: return m_ghx;
        case Channel::q_ghx: return q_ghx;
        case Channel::m_tes_in: return m_tes_in;
        case Channel::t_tes_out:
        case Channel::t_top:
        case Channel::t_mid:
        case Channel::t_bot: return temperature;
        default: return 0.0;
    }
}

void NoiseSpec::validate() const {
    for (double s : {m_ghx, q_ghx, m_tes_in, temperature})
        require(std::isfinite(s) && s >= 0.0, ErrorKind::parameter, "noise: sigma must be finite and >= 0");
}

PseudoExperiment make_pseudo_experiment(const GeneratorConfig& base, const Perturbation& perturbation,
                                        const NoiseSpec& noise, const ActuatorSchedule& schedule,
                                        const TimeGrid& grid, RngStream& stream, int id,
                                        const SmoothingSpec& smoothing) {
    noise.validate();
    require(smoothing.window % 2 == 1 && smoothing.window > smoothing.order, ErrorKind::parameter,
            "pseudo-experiment: smoothing window must be odd and larger than the order");
    require(grid.n_steps >= smoothing.window, ErrorKind::parameter,
            "pseudo-experiment: grid shorter than the smoothing window");
    const GeneratorConfig g = perturbation.apply(base);

    PseudoExperiment pe;
    pe.perturbation = perturbation;
    pe.noise = noise;
    pe.smoothing = smoothing;
    pe.raw = simulate(schedule, g.initial_bed(), g.bed, g.ghx, grid, g.plant, id);
    pe.raw.provenance = Provenance::pseudo_experimental;

    // Channel-major draw order so the noise on one channel does not depend on
    // which other channels are noisy.
    for (Channel c : noisy_channels) {
        const double s = noise.sigma(c);
        if (s == 0.0) continue;
        auto v = pe.raw.channel(c);
        for (double& x : v) x += s * stream.normal();
        pe.raw.set_channel(c, v);
    }

    pe.denoised = pe.raw;
    for (Channel c : noisy_channels) {
        pe.denoised.set_channel(c, savgol_filter(pe.raw.channel(c), smoothing.window, smoothing.order));
    }
    spdlog::debug("pseudo-experiment {}: h_c x{}, porosity x{}, effectiveness x{}", id, perturbation.h_c_scale,
                  perturbation.porosity_scale, perturbation.effectiveness_scale);
    return pe;
}

}  // namespace thermotwin
