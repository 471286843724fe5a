#pragma once

#include <cstdint>

#include "lvmc/timeseries.hpp"

namespace lvmc {

/// Parameters of the shipped synthetic "observed" corpus: southern-
/// hemisphere residential profiles with morning/evening demand peaks,
/// summer afternoon air-conditioning load, winter evening heating, weekend
/// shift and rooftop PV with seasonal clear-sky envelopes and cloud noise.
struct CorpusOptions {
    int customers = 150;
    int days = 365;
    std::uint64_t seed = 7;
    double pv_ownership = 1.0;   // fraction of customers with a PV system
    double demand_scale = 1.0;
    int start_weekday = 0;       // day 0 is a Monday, January 1
};

std::vector<CustomerProfile> make_synthetic_corpus(const CorpusOptions& options = {});

}  // namespace lvmc
