#pragma once

#include <string>
#include <vector>

#include "lvmc/common.hpp"

namespace lvmc {

/// One observed customer: half-hourly demand and PV series plus the feature
/// vector used for clustering (day-type demand mix, a resident-count proxy,
/// PV capacity, panel-orientation category).
struct CustomerProfile {
    std::string id;
    std::vector<double> demand_kw;  // >= 0, length a multiple of 48
    std::vector<double> pv_kw;      // >= 0, same length
    std::vector<double> features;

    int days() const { return static_cast<int>(demand_kw.size()) / kStepsPerDay; }
};

/// A synthetic yearly net-load trace split back into demand and PV parts.
struct NetLoadTrace {
    std::vector<double> demand_kw;
    std::vector<double> pv_kw;
    int assigned_cluster = 0;

    int days() const { return static_cast<int>(demand_kw.size()) / kStepsPerDay; }
    std::size_t size() const { return demand_kw.size(); }
    double net_kw(std::size_t t) const { return demand_kw[t] - pv_kw[t]; }
};

/// Throws InvalidInputError unless both series are nonnegative, equally long
/// and a whole number of days.
void validate_series(const std::vector<double>& demand_kw, const std::vector<double>& pv_kw,
                     const std::string& who);

/// Feature layout used by derive_features / cluster_customers.
enum FeatureIndex : int {
    kFeatWeekdayMeanKw = 0,
    kFeatWeekendMeanKw = 1,
    kFeatPvCapacityKw = 2,
    kFeatPvOrientation = 3,  // mean PV-weighted hour of day, 0 for no PV
    kFeatCount = 4
};

/// Derive the clustering feature vector from a profile's series.
/// `start_weekday` is the day-of-week of the first day (0 = Monday).
std::vector<double> derive_features(const CustomerProfile& profile, int start_weekday = 0);

/// Fill in features for every profile that does not have them yet.
void ensure_features(std::vector<CustomerProfile>& profiles, int start_weekday = 0);

}  // namespace lvmc
