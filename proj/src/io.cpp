#include "lvmc/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "lvmc/feeder.hpp"

namespace lvmc {

namespace {

/// Days since 1970-01-01 for a civil date (Howard Hinnant's algorithm).
long days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const long era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                         static_cast<unsigned>(d) - 1u;
    const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
    return era * 146097 + static_cast<long>(doe) - 719468;
}

/// Minutes since the epoch for "YYYY-MM-DDTHH:MM[:SS]"; local standard time,
/// no zone designators.
long parse_timestamp_minutes(const std::string& text, std::size_t row) {
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
    const int fields = std::sscanf(text.c_str(), "%d-%d-%dT%d:%d:%d", &y, &mo, &d, &h, &mi, &s);
    if (fields < 5 || mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 ||
        mi > 59 || s != 0)
        throw ParseError("row " + std::to_string(row) + ": bad timestamp '" + text + "'");
    return days_from_civil(y, mo, d) * 1440L + h * 60L + mi;
}

std::string format_timestamp(long minutes) {
    long days = minutes / 1440L;
    const long rem = minutes % 1440L;
    // Civil date from day count (inverse of days_from_civil).
    days += 719468;
    const long era = (days >= 0 ? days : days - 146096) / 146097;
    const auto doe = static_cast<unsigned long>(days - era * 146097);
    const unsigned long yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const long y = static_cast<long>(yoe) + era * 400;
    const unsigned long doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned long mp = (5 * doy + 2) / 153;
    const unsigned long d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned long m = mp + (mp < 10 ? 3 : static_cast<unsigned long>(-9));
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%04ld-%02lu-%02luT%02ld:%02ld", y + (m <= 2), m, d,
                  rem / 60, rem % 60);
    return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(field);
            field.clear();
        } else if (c != '\r') {
            field += c;
        }
    }
    fields.push_back(field);
    return fields;
}

double parse_kw(const std::string& text, std::size_t row, const char* what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ParseError("row " + std::to_string(row) + ": bad " + std::string(what) + " value '" +
                         text + "'");
    }
}

std::string format_roundtrip(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    // Trim to the shortest representation that still round-trips.
    for (int prec = 1; prec < 17; ++prec) {
        char shorter[40];
        std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
        if (std::stod(shorter) == v) return shorter;
    }
    return buf;
}

}  // namespace

std::vector<CustomerProfile> parse_trace_csv(std::istream& in, const std::string& source_name,
                                             std::vector<std::string>* warnings) {
    std::string line;
    std::size_t row = 0;
    if (!std::getline(in, line))
        throw ParseError(source_name + ": empty file");
    ++row;
    if (split_csv_line(line) !=
        std::vector<std::string>{"customer_id", "timestamp_iso8601", "demand_kw", "pv_kw"})
        throw ParseError(source_name +
                         ": header must be customer_id,timestamp_iso8601,demand_kw,pv_kw");

    std::vector<CustomerProfile> profiles;
    CustomerProfile* current = nullptr;
    long last_minutes = 0;

    auto interpolate_gap = [&](long gap_steps, double demand, double pv, std::size_t at_row) {
        // gap_steps missing samples between the last stored one and this row.
        if (gap_steps > 2)
            throw ParseError("row " + std::to_string(at_row) + ": gap of " +
                             std::to_string(gap_steps) + " steps in customer '" + current->id +
                             "' exceeds the 2-step interpolation limit");
        const double d0 = current->demand_kw.back();
        const double p0 = current->pv_kw.back();
        for (long g = 1; g <= gap_steps; ++g) {
            const double w = static_cast<double>(g) / static_cast<double>(gap_steps + 1);
            current->demand_kw.push_back(d0 + (demand - d0) * w);
            current->pv_kw.push_back(p0 + (pv - p0) * w);
        }
        if (warnings != nullptr)
            warnings->push_back("customer '" + current->id + "': interpolated " +
                                std::to_string(gap_steps) + " missing step(s) before row " +
                                std::to_string(at_row));
    };

    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 4)
            throw ParseError("row " + std::to_string(row) + ": expected 4 fields, got " +
                             std::to_string(fields.size()));
        const std::string& id = fields[0];
        const long minutes = parse_timestamp_minutes(fields[1], row);
        const double demand = parse_kw(fields[2], row, "demand_kw");
        const double pv = parse_kw(fields[3], row, "pv_kw");
        if (demand < 0.0)
            throw InvalidInputError("row " + std::to_string(row) + ": negative demand_kw");
        if (pv < 0.0) throw InvalidInputError("row " + std::to_string(row) + ": negative pv_kw");

        if (current == nullptr || current->id != id) {
            for (const auto& p : profiles)
                if (p.id == id)
                    throw ParseError("row " + std::to_string(row) + ": customer '" + id +
                                     "' rows are not contiguous");
            profiles.push_back(CustomerProfile{id, {}, {}, {}});
            current = &profiles.back();
        } else {
            const long delta = minutes - last_minutes;
            if (delta <= 0)
                throw ParseError("row " + std::to_string(row) +
                                 ": timestamps not strictly increasing");
            if (delta % 30 != 0)
                throw ParseError("row " + std::to_string(row) +
                                 ": spacing is not a multiple of 30 minutes");
            if (delta > 30) interpolate_gap(delta / 30 - 1, demand, pv, row);
        }
        current->demand_kw.push_back(demand);
        current->pv_kw.push_back(pv);
        last_minutes = minutes;
    }
    if (profiles.empty()) throw ParseError(source_name + ": no data rows");
    for (auto& p : profiles) {
        if (p.demand_kw.size() % kStepsPerDay != 0)
            throw InvalidInputError("customer '" + p.id + "': series length " +
                                    std::to_string(p.demand_kw.size()) +
                                    " is not a whole number of days");
        p.features = derive_features(p);
    }
    return profiles;
}

std::vector<CustomerProfile> ingest_traces(const std::string& path,
                                           std::vector<std::string>* warnings) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open trace CSV '" + path + "'");
    return parse_trace_csv(in, path, warnings);
}

std::string traces_to_csv(const std::vector<CustomerProfile>& profiles,
                          const std::string& start_iso) {
    const long start_minutes = parse_timestamp_minutes(start_iso, 0);
    std::string out = "customer_id,timestamp_iso8601,demand_kw,pv_kw\n";
    for (const auto& p : profiles) {
        for (std::size_t t = 0; t < p.demand_kw.size(); ++t) {
            out += p.id;
            out += ',';
            out += format_timestamp(start_minutes + static_cast<long>(t) * 30L);
            out += ',';
            out += format_roundtrip(p.demand_kw[t]);
            out += ',';
            out += format_roundtrip(p.pv_kw[t]);
            out += '\n';
        }
    }
    return out;
}

std::vector<PoolEntry> pool_from_profiles(const std::vector<CustomerProfile>& profiles) {
    std::vector<PoolEntry> pool;
    pool.reserve(profiles.size());
    for (const auto& p : profiles) {
        PoolEntry entry;
        entry.trace.demand_kw = p.demand_kw;
        entry.trace.pv_kw = p.pv_kw;
        entry.pv_capacity_kw =
            p.features.size() > kFeatPvCapacityKw ? p.features[kFeatPvCapacityKw] : 0.0;
        pool.push_back(std::move(entry));
    }
    return pool;
}

std::string schedule_csv(const NetLoadTrace& trace, const DispatchSchedule& schedule,
                         const Tariff& tariff) {
    std::string out = "t,demand_kw,pv_kw,battery_kw,soc_kwh,grid_kw,cost\n";
    char buf[200];
    for (std::size_t t = 0; t < schedule.steps(); ++t) {
        const double cost =
            stage_cost(schedule.grid_kw[t], tariff.buy_at(t), tariff.feed_in, kStepHours);
        std::snprintf(buf, sizeof(buf), "%zu,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n", t,
                      trace.demand_kw[t], trace.pv_kw[t], schedule.battery_kw[t],
                      schedule.soc_kwh[t + 1], schedule.grid_kw[t], cost);
        out += buf;
    }
    return out;
}

std::string benchmark_csv(const SpeedupReport& report) {
    std::string out = "customer_id,dp_cost,pfa_cost,dp_seconds,pfa_seconds\n";
    char buf[200];
    for (const auto& row : report.rows) {
        std::snprintf(buf, sizeof(buf), "%s,%.10g,%.10g,%.6f,%.6f\n", row.customer_id.c_str(),
                      row.dp_cost, row.pfa_cost, row.dp_seconds, row.pfa_seconds);
        out += buf;
    }
    return out;
}

namespace {

void require_range(bool ok, const std::string& field, const std::string& detail) {
    if (!ok) throw InvalidInputError("config field '" + field + "': " + detail);
}

std::string resolve_path(const std::string& base_dir, const std::string& rel,
                         const std::string& field) {
    namespace fs = std::filesystem;
    fs::path p(rel);
    if (p.is_relative()) p = fs::path(base_dir) / p;
    if (!fs::exists(p))
        throw InvalidInputError("config field '" + field + "': path '" + p.string() +
                                "' does not exist");
    return p.string();
}

}  // namespace

ExperimentConfig experiment_config_from_json(const nlohmann::json& j,
                                             const std::string& base_dir) {
    ExperimentConfig config;
    config.seed = j.value("seed", std::uint64_t{1});

    if (j.contains("corpus_csv"))
        config.corpus_csv = resolve_path(base_dir, j.at("corpus_csv").get<std::string>(),
                                         "corpus_csv");
    if (j.contains("pool_csv"))
        config.pool_csv = resolve_path(base_dir, j.at("pool_csv").get<std::string>(), "pool_csv");
    if (j.contains("policy_json"))
        config.policy_json =
            resolve_path(base_dir, j.at("policy_json").get<std::string>(), "policy_json");

    if (j.contains("feeder")) {
        const auto& fj = j.at("feeder");
        if (fj.is_string())
            config.feeder_id = fj.get<std::string>();
        else if (fj.is_object() && fj.contains("json"))
            config.feeder_json = resolve_path(base_dir, fj.at("json").get<std::string>(),
                                              "feeder.json");
        else
            throw InvalidInputError("config field 'feeder': expected fixture id or {\"json\": path}");
    }

    if (j.contains("mc")) {
        const auto& m = j.at("mc");
        config.mc.runs = m.value("runs", config.mc.runs);
        if (m.contains("pv_levels")) config.mc.pv_levels = m.at("pv_levels").get<std::vector<double>>();
        if (m.contains("battery_levels"))
            config.mc.battery_levels = m.at("battery_levels").get<std::vector<double>>();
        config.mc.days = m.value("days", config.mc.days);
        config.mc.demand_power_factor = m.value("demand_power_factor", config.mc.demand_power_factor);
        config.mc.dp_soc_levels = m.value("dp_soc_levels", config.mc.dp_soc_levels);
        config.mc.parallelism = m.value("parallelism", config.mc.parallelism);
        if (m.contains("scheduler"))
            config.mc.scheduler = scheduler_from_string(m.at("scheduler").get<std::string>());
    }
    config.mc.seed = config.seed;
    config.mc.validate();

    if (j.contains("tariff")) {
        const auto& tj = j.at("tariff");
        if (tj.contains("buy_price")) {
            const auto prices = tj.at("buy_price").get<std::vector<double>>();
            require_range(prices.size() == kStepsPerDay, "tariff.buy_price",
                          "expected 48 slot prices");
            std::copy(prices.begin(), prices.end(), config.tariff.buy_price.begin());
        } else {
            Tariff base = default_tariff();
            const double peak = tj.value("peak", 0.55);
            const double shoulder = tj.value("shoulder", 0.25);
            const double offpeak = tj.value("offpeak", 0.15);
            for (int s = 0; s < kStepsPerDay; ++s) {
                const double p = base.buy_price[s];
                config.tariff.buy_price[s] = p == 0.55 ? peak : (p == 0.25 ? shoulder : offpeak);
            }
        }
        config.tariff.feed_in = tj.value("feed_in", config.tariff.feed_in);
    }
    config.tariff.validate();

    if (j.contains("battery_table")) {
        config.battery_table.clear();
        for (const auto& bj : j.at("battery_table")) {
            BatteryBandEntry entry{bj.at("pv_max_kw").get<double>(),
                                   bj.at("capacity_kwh").get<double>(),
                                   bj.at("power_kw").get<double>()};
            require_range(entry.pv_max_kw > 0 && entry.capacity_kwh > 0 && entry.power_kw > 0,
                          "battery_table", "entries must be positive");
            config.battery_table.push_back(entry);
        }
        require_range(!config.battery_table.empty(), "battery_table", "must be nonempty");
    }

    if (j.contains("synthesis")) {
        const auto& sj = j.at("synthesis");
        config.synthesis.n_states = sj.value("n_states", config.synthesis.n_states);
        config.synthesis.concentration = sj.value("concentration", config.synthesis.concentration);
        config.synthesis.restarts = sj.value("restarts", config.synthesis.restarts);
        config.synthesis.pool_size = sj.value("pool_size", config.synthesis.pool_size);
        config.synthesis.days = sj.value("days", config.synthesis.days);
        config.synthesis.self_consumed_fraction =
            sj.value("self_consumed_fraction", config.synthesis.self_consumed_fraction);
        require_range(config.synthesis.n_states >= 1, "synthesis.n_states", "must be >= 1");
        require_range(config.synthesis.concentration > 0, "synthesis.concentration",
                      "must be positive");
        require_range(config.synthesis.restarts >= 1, "synthesis.restarts", "must be >= 1");
        require_range(config.synthesis.pool_size >= 1, "synthesis.pool_size", "must be >= 1");
        require_range(config.synthesis.days >= 1, "synthesis.days", "must be >= 1");
        require_range(config.synthesis.self_consumed_fraction >= 0.0 &&
                          config.synthesis.self_consumed_fraction <= 1.0,
                      "synthesis.self_consumed_fraction", "must be in [0, 1]");
    }

    if (j.contains("pfa")) {
        const auto& pj = j.at("pfa");
        config.pfa.hidden_units = pj.value("hidden_units", config.pfa.hidden_units);
        config.pfa.epochs = pj.value("epochs", config.pfa.epochs);
        config.pfa.max_samples = pj.value("max_samples", config.pfa.max_samples);
        config.pfa.holdout_fraction = pj.value("holdout_fraction", config.pfa.holdout_fraction);
        require_range(config.pfa.hidden_units >= 1, "pfa.hidden_units", "must be >= 1");
        require_range(config.pfa.epochs >= 1, "pfa.epochs", "must be >= 1");
        require_range(config.pfa.holdout_fraction >= 0.0 && config.pfa.holdout_fraction < 1.0,
                      "pfa.holdout_fraction", "must be in [0, 1)");
    }
    config.pfa.seed = config.seed;
    return config;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("config '" + path + "': " + e.what());
    }
    return experiment_config_from_json(j, std::filesystem::path(path).parent_path().string());
}

FeederModel load_feeder(const ExperimentConfig& config) {
    if (!config.feeder_json.empty()) {
        nlohmann::json j;
        std::ifstream in(config.feeder_json);
        if (!in) throw ParseError("cannot open feeder '" + config.feeder_json + "'");
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("feeder '" + config.feeder_json + "': " + e.what());
        }
        return feeder_from_json(j);
    }
    if (!config.feeder_id.empty()) return fixture_feeder(config.feeder_id);
    throw InvalidInputError("config: no feeder given (set 'feeder' to a fixture id or file)");
}

void atomic_write(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.parent_path() / (target.filename().string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write '" + tmp.string() + "'");
        out << content;
        if (!out) throw Error("short write to '" + tmp.string() + "'");
    }
    fs::rename(tmp, target);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace lvmc
