#include "kkrx/link.hpp"

#include "kkrx/rng.hpp"

namespace kkrx {

void LinkConfig::validate() const {
    tx.validate();
    channel.validate();
    if (!(dc_factor > 0)) throw Error("dc_factor must be positive");
    if (!(ddlms_step >= 0)) throw Error("ddlms step must be non-negative");
    if (buffers == 0) throw Error("buffers must be at least 1");
    if (std::abs(channel.adc_rate - 4.0 * tx.baud) > 1e-6 * channel.adc_rate)
        throw Error("the ADC must sample at 4 samples per symbol");
}

LinkSimulator::LinkSimulator(Constellation c, LinkConfig cfg) : c_(std::move(c)), cfg_(std::move(cfg)) {
    cfg_.validate();
    tx_ = transmit(c_, cfg_.tx);
    const AdcResult first = capture_full(0);
    full_scale_ = (cfg_.channel.adc_bits > 0 && first.gain > 0) ? (std::ldexp(1.0, cfg_.channel.adc_bits - 1) - 1.0) / first.gain : 0.0;
    nominal_dc_ = first.removed_mean * first.gain;
}

CVec LinkSimulator::tx_points() const { return symbol_points(tx_.indices, c_); }

SampleBuffer LinkSimulator::optical_field(std::size_t b) const {
    SampleBuffer x = load_noise(tx_.field, cfg_.channel, derive_seed(cfg_.channel.seed, b));
    x = optical_bpf(x, cfg_.channel);
    return dispersion_apply(x, cfg_.channel);
}

AdcResult LinkSimulator::capture_full(std::size_t b) const {
    return adc_convert(photodiode(optical_field(b), cfg_.channel), cfg_.channel, full_scale_);
}

KkConfig LinkSimulator::kk_config() const {
    KkConfig k;
    k.dc_offset = cfg_.dc_factor * nominal_dc_;
    k.tone_frequency = cfg_.tx.effective_tone_frequency();
    k.adc_rate = cfg_.channel.adc_rate;
    k.baud = cfg_.tx.baud;
    k.clamp = cfg_.clamp;
    return k;
}

EqualizerState LinkSimulator::initial_state(const StaticEqualizer& eq) const {
    EqualizerState s;
    s.static_eq = eq;
    s.adaptive = AdaptiveEqualizer::center_spike(cfg_.ddlms_step);
    s.adaptive.training_symbols = cfg_.training_symbols;
    s.adaptive.mode = cfg_.training_symbols > 0 ? DdlmsMode::Training : DdlmsMode::DecisionDirected;
    return s;
}

SampleBuffer kk_baseband(const SampleBuffer& capture, const KkConfig& kk) {
    const KkFrontend fe = kk_frontend(capture, kk);
    return reconstruct_and_downconvert(fe.amplitude, hilbert_phase(fe.log_amplitude, kk), kk);
}

SampleBuffer kk_baseband(const LinkSimulator& link, std::size_t b) { return kk_baseband(link.capture(b), link.kk_config()); }

StaticEqualizer train_on_link(const LinkSimulator& link, const SampleBuffer& capture, const KkConfig& kk) {
    StaticEqConfig cfg = link.config().static_eq;
    cfg.rolloff = link.config().tx.rolloff;
    cfg.rrc_span = link.config().tx.rrc_span;
    return train_static_eq(kk_baseband(capture, kk), link.tx_points(), cfg);
}

StaticEqualizer train_on_link(const LinkSimulator& link, std::size_t b) {
    return train_on_link(link, link.capture(b), link.kk_config());
}

}  // namespace kkrx
