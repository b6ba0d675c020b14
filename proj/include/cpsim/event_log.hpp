#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace cpsim {

// Parameters of one realized space-time window.
struct SimConfig {
    double mu = 0.0;          // arrow rate per directed edge
    int range_M = 1;          // interaction range
    int x_min = 0;            // window [x_min, x_max]
    int x_max = 0;
    double horizon = 0.0;     // events live in (0, horizon]
    std::uint64_t seed = 0;

    int width() const { return x_max - x_min + 1; }
    // throws std::invalid_argument naming the violated field
    void validate() const;
    bool operator==(const SimConfig&) const = default;
};

enum class EdgeMask { full_graph, half_line };

enum class EventKind : std::uint8_t { death = 0, arrow = 1 };

// One scheduled event. The source site is implicit in the per-site
// grouping of the schedule; deaths carry dst == source site.
struct Event {
    double t;
    std::int32_t dst;
    EventKind kind;
};

// The realized graphical representation: per-site death streams and
// per-directed-edge arrow streams, merged into one schedule per source
// site, time-sorted. Immutable after construction.
class EventLog {
public:
    // Poisson streams at rates 1 (deaths) and mu (each directed edge).
    static EventLog build(const SimConfig& config);

    // Arrows generated at rate mu_base >= config.mu with an independent
    // uniform mark per arrow; an evolution at effective rate mu keeps an
    // arrow iff mark < mu / mu_base. Coupled thinning across rates.
    static EventLog build_with_marks(const SimConfig& config, double mu_base);

    // Explicit construction (tests, deserialization). Streams must be
    // strictly increasing and within (0, horizon]; sites/edges must fit
    // the window and range. Throws std::invalid_argument otherwise.
    static EventLog from_streams(
        const SimConfig& config,
        const std::map<int, std::vector<double>>& deaths,
        const std::map<std::pair<int, int>, std::vector<double>>& arrows);

    const SimConfig& config() const { return config_; }
    double arrow_base_rate() const { return mu_base_; }
    bool has_marks() const { return !marks_.empty(); }

    bool in_window(int site) const {
        return site >= config_.x_min && site <= config_.x_max;
    }

    // schedule of events whose source is `site`, time-sorted
    const Event* site_events(int site) const {
        return events_.data() + site_begin_[site - config_.x_min];
    }
    std::uint32_t site_begin(int site) const { return site_begin_[site - config_.x_min]; }
    std::uint32_t site_end(int site) const { return site_begin_[site - config_.x_min + 1]; }
    const Event& event(std::uint32_t idx) const { return events_[idx]; }
    double mark(std::uint32_t idx) const { return marks_[idx]; }
    std::size_t total_events() const { return events_.size(); }
    std::size_t total_arrows() const;

    // first event index of `site` with time strictly greater than t
    std::uint32_t first_after(int site, double t) const;

    // stream extraction (serialization, law tests)
    std::vector<double> deaths_at(int site) const;
    std::vector<double> arrows_on(int from, int to) const;

    // documented JSON form; times as decimal strings with 17 significant
    // digits so the round trip is bit exact
    std::string to_json() const;
    static EventLog from_json(const std::string& text);

private:
    EventLog() = default;
    void index_sites(std::vector<std::pair<std::uint32_t, Event>>&& tagged,
                     std::vector<double>&& tagged_marks);

    SimConfig config_;
    double mu_base_ = 0.0;
    std::vector<Event> events_;        // grouped by source site, time-sorted
    std::vector<double> marks_;        // parallel to events_ when present
    std::vector<std::uint32_t> site_begin_;  // width + 1 offsets
};

// A masked, rate-thinned view of a log. Cheap to copy; the log outlives it.
struct LogView {
    const EventLog* log = nullptr;
    EdgeMask mask = EdgeMask::full_graph;
    double mu_eff = -1.0;  // < 0: no thinning

    bool admits_arrow(int src, int dst, std::uint32_t ev_idx) const {
        if (mask == EdgeMask::half_line && (src > 0 || dst > 0)) return false;
        if (mu_eff >= 0.0 && log->has_marks() &&
            log->mark(ev_idx) * log->arrow_base_rate() >= mu_eff)
            return false;
        return true;
    }
};

inline LogView masked_view(const EventLog& log, EdgeMask mask) {
    return LogView{&log, mask, -1.0};
}

inline LogView thinned_view(const EventLog& log, EdgeMask mask, double mu_eff) {
    return LogView{&log, mask, mu_eff};
}

}  // namespace cpsim
