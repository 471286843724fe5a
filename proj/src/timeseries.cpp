#include "lvmc/timeseries.hpp"

#include <cmath>

namespace lvmc {

void validate_series(const std::vector<double>& demand_kw, const std::vector<double>& pv_kw,
                     const std::string& who) {
    if (demand_kw.size() != pv_kw.size())
        throw InvalidInputError(who + ": demand and pv series lengths differ");
    if (demand_kw.empty() || demand_kw.size() % kStepsPerDay != 0)
        throw InvalidInputError(who + ": series length must be a nonzero multiple of 48");
    for (std::size_t t = 0; t < demand_kw.size(); ++t) {
        if (!std::isfinite(demand_kw[t]) || demand_kw[t] < 0.0)
            throw InvalidInputError(who + ": negative or non-finite demand at step " +
                                    std::to_string(t));
        if (!std::isfinite(pv_kw[t]) || pv_kw[t] < 0.0)
            throw InvalidInputError(who + ": negative or non-finite pv at step " +
                                    std::to_string(t));
    }
}

std::vector<double> derive_features(const CustomerProfile& profile, int start_weekday) {
    validate_series(profile.demand_kw, profile.pv_kw, "profile " + profile.id);
    const int days = profile.days();

    double weekday_sum = 0.0, weekend_sum = 0.0;
    int weekday_n = 0, weekend_n = 0;
    for (int d = 0; d < days; ++d) {
        const int dow = (start_weekday + d) % 7;
        double day_sum = 0.0;
        for (int t = 0; t < kStepsPerDay; ++t)
            day_sum += profile.demand_kw[static_cast<std::size_t>(d) * kStepsPerDay + t];
        if (dow >= 5) {
            weekend_sum += day_sum;
            ++weekend_n;
        } else {
            weekday_sum += day_sum;
            ++weekday_n;
        }
    }
    const double weekday_mean = weekday_n > 0 ? weekday_sum / (weekday_n * kStepsPerDay) : 0.0;
    const double weekend_mean = weekend_n > 0 ? weekend_sum / (weekend_n * kStepsPerDay) : 0.0;

    // PV capacity as a high quantile of the generation series; robust to
    // one-off spikes, close to nameplate for clear-sky days.
    std::vector<double> pv_sorted(profile.pv_kw);
    std::sort(pv_sorted.begin(), pv_sorted.end());
    const double capacity =
        pv_sorted.empty() ? 0.0 : pv_sorted[static_cast<std::size_t>(0.995 * (pv_sorted.size() - 1))];

    // Orientation proxy: generation-weighted mean hour of day.
    double hour_weighted = 0.0, pv_total = 0.0;
    for (std::size_t t = 0; t < profile.pv_kw.size(); ++t) {
        const double hour = static_cast<double>(t % kStepsPerDay) * kStepHours;
        hour_weighted += hour * profile.pv_kw[t];
        pv_total += profile.pv_kw[t];
    }
    const double orientation = pv_total > 0.0 ? hour_weighted / pv_total : 0.0;

    return {weekday_mean, weekend_mean, capacity, orientation};
}

void ensure_features(std::vector<CustomerProfile>& profiles, int start_weekday) {
    for (auto& p : profiles)
        if (p.features.empty()) p.features = derive_features(p, start_weekday);
}

}  // namespace lvmc
