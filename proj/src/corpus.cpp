#include "lvmc/corpus.hpp"

#include <cmath>

#include "lvmc/markov.hpp"

namespace lvmc {

namespace {

double bell(double hour, double center, double width) {
    const double z = (hour - center) / width;
    return std::exp(-0.5 * z * z);
}

struct DayWeather {
    double summer = 0.0;  // 1 mid-January, 0 mid-July
    double hot = 0.0;     // air-conditioning driver
    double clear = 1.0;   // daily clearness index
    bool weekend = false;
};

}  // namespace

std::vector<CustomerProfile> make_synthetic_corpus(const CorpusOptions& options) {
    if (options.customers < 1 || options.days < 1)
        throw InvalidInputError("make_synthetic_corpus: customers and days must be positive");

    // Day-level weather is shared by all customers so that hot spells and
    // sunny days coincide across the feeder.
    Rng weather_rng(derive_seed(options.seed, {0xda1}));
    std::vector<DayWeather> weather(static_cast<std::size_t>(options.days));
    for (int d = 0; d < options.days; ++d) {
        DayWeather& w = weather[static_cast<std::size_t>(d)];
        w.summer = 0.5 * (1.0 + std::cos(2.0 * M_PI * (d - 14) / 365.0));
        const double raw = std::clamp(0.65 + 0.30 * weather_rng.normal(), 0.0, 1.2);
        w.hot = w.summer * raw;
        w.clear = std::clamp(0.50 + 0.25 * raw + 0.25 * (weather_rng.uniform() - 0.5), 0.25, 1.0);
        w.weekend = (options.start_weekday + d) % 7 >= 5;
    }

    std::vector<CustomerProfile> corpus;
    corpus.reserve(static_cast<std::size_t>(options.customers));
    const double pv_sizes[6] = {3.0, 4.0, 5.0, 5.5, 6.0, 7.0};

    for (int c = 0; c < options.customers; ++c) {
        Rng rng(derive_seed(options.seed, {0xc05, static_cast<std::uint64_t>(c)}));
        CustomerProfile profile;
        profile.id = "obs" + std::to_string(c);

        const double base = options.demand_scale * rng.uniform(0.30, 0.55);
        const double morning = options.demand_scale * rng.uniform(0.25, 0.80);
        const double evening = options.demand_scale * rng.uniform(0.60, 1.50);
        const double aircon = options.demand_scale * rng.uniform(0.50, 1.80);
        const double heating = options.demand_scale * rng.uniform(0.20, 0.90);
        const bool has_pv = rng.uniform() < options.pv_ownership;
        const double pv_cap = has_pv ? pv_sizes[rng.uniform_index(6)] : 0.0;
        const double orient_shift = rng.uniform(-0.75, 0.75);

        const std::size_t len = static_cast<std::size_t>(options.days) * kStepsPerDay;
        profile.demand_kw.resize(len);
        profile.pv_kw.resize(len);

        double noise = 0.0, cloud = 0.0;
        for (int d = 0; d < options.days; ++d) {
            const DayWeather& w = weather[static_cast<std::size_t>(d)];
            const double wf = 1.0 - w.summer;
            const double half_day = 5.3 + 1.2 * w.summer;
            const double sunrise = 12.0 - half_day;
            for (int s = 0; s < kStepsPerDay; ++s) {
                const double hour = s * kStepHours + 0.25;
                double demand = base;
                demand += morning * bell(hour, 7.5, 1.1) * (w.weekend ? 0.55 : 1.0);
                demand += evening * bell(hour, 18.6, 1.6) * (1.0 + 0.45 * wf);
                demand += aircon * w.hot * bell(hour, 15.6, 2.2);
                demand += heating * wf * bell(hour, 19.5, 2.0);
                if (w.weekend) demand += 0.22 * options.demand_scale * bell(hour, 13.0, 3.0);

                noise = 0.72 * noise + 0.28 * rng.normal();
                demand *= std::clamp(1.0 + 0.28 * noise, 0.25, 2.2);
                if (rng.uniform() < 0.015) demand += rng.uniform(0.4, 1.8);

                double pv = 0.0;
                if (pv_cap > 0.0) {
                    const double h = hour + orient_shift;
                    if (h > sunrise && h < sunrise + 2.0 * half_day) {
                        const double arc = std::sin(M_PI * (h - sunrise) / (2.0 * half_day));
                        cloud = 0.85 * cloud + 0.30 * rng.normal();
                        const double cloud_dip =
                            std::clamp(1.0 - 0.6 * std::abs(cloud) * (1.0 - w.clear), 0.15, 1.0);
                        pv = pv_cap * (0.72 + 0.28 * w.summer) * w.clear *
                             std::pow(arc, 1.3) * cloud_dip;
                    }
                }
                const auto t = static_cast<std::size_t>(d) * kStepsPerDay +
                               static_cast<std::size_t>(s);
                profile.demand_kw[t] = std::max(demand, 0.03);
                profile.pv_kw[t] = std::max(pv, 0.0);
            }
        }
        profile.features = derive_features(profile, options.start_weekday);
        corpus.push_back(std::move(profile));
    }
    return corpus;
}

}  // namespace lvmc
