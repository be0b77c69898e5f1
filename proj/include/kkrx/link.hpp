#pragma once

#include <cstdint>

#include "kkrx/channel.hpp"
#include "kkrx/constellation.hpp"
#include "kkrx/rxdsp.hpp"
#include "kkrx/txdsp.hpp"

namespace kkrx {

struct LinkConfig {
    TxConfig tx;
    ChannelConfig channel;
    double dc_factor = 1.0;              // KK dc offset in units of the nominal lost DC
    bool clamp = false;
    StaticEqConfig static_eq;
    double ddlms_step = 1e-3;
    std::size_t training_symbols = 10000;
    std::size_t buffers = 4;             // captures per stream

    void validate() const;
};

// One simulated link. Every capture holds one period of the transmitted
// sequence at the ADC rate with its own noise realization; consecutive
// captures form a continuous stream. The ADC full scale and the nominal DC
// term are fixed by capture 0.
class LinkSimulator {
public:
    LinkSimulator(Constellation c, LinkConfig cfg);

    const Constellation& constellation() const { return c_; }
    const LinkConfig& config() const { return cfg_; }
    const TxWaveform& tx() const { return tx_; }
    CVec tx_points() const;

    // Optical field entering the photodiode for capture b.
    SampleBuffer optical_field(std::size_t b) const;
    AdcResult capture_full(std::size_t b) const;
    SampleBuffer capture(std::size_t b) const { return capture_full(b).codes; }

    // DC term removed by AC coupling, in ADC codes.
    double nominal_dc() const { return nominal_dc_; }
    double full_scale() const { return full_scale_; }
    KkConfig kk_config() const;
    EqualizerState initial_state(const StaticEqualizer& eq) const;

private:
    Constellation c_;
    LinkConfig cfg_;
    TxWaveform tx_;
    double full_scale_ = 0.0;
    double nominal_dc_ = 0.0;
};

// Baseband at 4 sps recovered from capture b of `link` with the configured
// dc offset: the static equalizer's training input.
SampleBuffer kk_baseband(const LinkSimulator& link, std::size_t b);
SampleBuffer kk_baseband(const SampleBuffer& capture, const KkConfig& kk);

// Train the static equalizer on capture b of `link`.
StaticEqualizer train_on_link(const LinkSimulator& link, std::size_t b = 0);
StaticEqualizer train_on_link(const LinkSimulator& link, const SampleBuffer& capture, const KkConfig& kk);

}  // namespace kkrx
