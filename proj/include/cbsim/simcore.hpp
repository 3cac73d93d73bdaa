#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cbsim/adversary.hpp"
#include "cbsim/jsonl.hpp"
#include "cbsim/potential.hpp"

namespace cbsim {

struct ScheduleSpec {
    enum class Kind { Batch, Windowed, Trace, Explicit };
    Kind kind = Kind::Batch;
    std::int64_t n = 1;  // batch
    // windowed
    Slot w = 0;
    ArrivalPattern pattern = ArrivalPattern::Smooth;
    std::optional<double> rate;
    Slot arrival_horizon = -1;  // -1: arrivals may occur over the whole run
    // trace
    std::string trace_path;
    // tests
    ArrivalSchedule explicit_schedule;

    static ScheduleSpec batch(std::int64_t n);
    static ScheduleSpec windowed(Slot w, ArrivalPattern p, std::optional<double> rate = {},
                                 Slot arrival_horizon = -1);
    static ScheduleSpec trace(std::string path);
    static ScheduleSpec explicit_arrivals(ArrivalSchedule s);
};

struct RunConfig {
    int kappa = 64;
    Slot horizon = 0;  // must be set to a positive slot count
    std::uint64_t seed = 0;
    ScheduleSpec schedule;
    bool strict_lemmas = false;
    bool verify_coding = false;
    int snapshot_stride = 0;  // 0 = auto: 1 while horizon <= 1e6, else 16
    bool continuous_max_backlog = false;
    std::size_t decoder_lookback = 0;  // 0 = 2*kappa
    std::size_t payload_len = 32;
    bool collect_details = false;       // keep epoch records, sparse events, windows
    bool keep_backlog_samples = false;  // retain the sampled (slot, backlog) series
};

struct LatencyStats {
    std::int64_t p50 = 0;  // nearest-rank percentiles over delivered packets
    std::int64_t p99 = 0;
    std::int64_t max = 0;
};

struct VerdictSummary {
    std::int64_t checked = 0;
    std::int64_t satisfied = 0;
    std::vector<EpochDeltaVerdict> violations;  // capped at 64 entries
};

struct SparseEvent {
    Slot slot = 0;
    double phi = 0;
    double contention = 0;
    double p_min = 1;
};

struct RunReport {
    int kappa = 0;
    Slot horizon = 0;
    std::uint64_t seed = 0;
    Slot w = 0;  // 0 when the schedule has no window
    std::string schedule_name;
    std::int64_t arrivals = 0;
    std::int64_t delivered = 0;
    std::int64_t censored = 0;  // still in the system when the horizon cut
    std::int64_t max_backlog = 0;
    LatencyStats latency;
    std::int64_t silent_epochs = 0;
    std::int64_t successful_epochs = 0;
    std::int64_t overfull_epochs = 0;
    std::int64_t epochs = 0;
    std::int64_t error_epochs = 0;
    double error_epoch_rate = 0;
    std::int64_t sparse_events = 0;
    VerdictSummary verdicts;
    std::int64_t decoding_events = 0;
    std::int64_t decoder_mismatches = 0;  // decoder vs successful-epoch disagreements
    std::int64_t coding_checked = 0;
    std::int64_t coding_singular = 0;
    std::int64_t coding_roundtrip_failures = 0;
    double throughput = 0;  // delivered / horizon
    Slot last_delivery_slot = -1;
    double wall_clock_ms = 0;  // never serialized to JSONL
    std::vector<std::pair<Slot, std::int64_t>> backlog_samples;
};

struct EpochRecord {
    Slot start = 0;
    EpochOutcome outcome;
    bool is_error = false;
    PotentialSnapshot before, after;
    EpochDeltaVerdict verdict;
    ActivationBreakdown activation;  // meaningful for silent epochs
};

// A decoding window with its per-slot transmitter sets, for the coding layer.
struct WindowTrace {
    std::vector<SlotRecord> good_slots;
    std::vector<PacketId> decoded;
};

struct RunResult {
    RunReport report;
    std::vector<EpochRecord> epochs;    // collect_details
    std::vector<SparseEvent> sparse;    // collect_details
    std::vector<DecodingEvent> events;  // collect_details
    std::vector<WindowTrace> windows;   // collect_details
};

class LemmaViolationError : public std::runtime_error {
public:
    LemmaViolationError(std::string msg, EpochDeltaVerdict verdict, Slot epoch_start)
        : std::runtime_error(std::move(msg)), verdict(std::move(verdict)), epoch_start(epoch_start) {}
    EpochDeltaVerdict verdict;
    Slot epoch_start;
};

bool is_sparse(const PotentialSnapshot& s, int kappa);
std::vector<SparseEvent> detect_sparse_events(const std::vector<PotentialSnapshot>& snapshots,
                                              int kappa);

// One deterministic run: adversary -> protocol -> channel -> potential per
// slot. Identical (config, seed) pairs produce identical results and an
// identical JSONL stream.
RunResult run(const RunConfig& cfg, JsonlWriter* sink = nullptr);

struct CellResult {
    std::size_t index = 0;
    std::optional<RunReport> report;
    std::string error;
};

// Independent cells, optionally executed on `jobs` threads. A failing cell
// carries its error; the others still complete. Rejects an empty grid.
std::vector<CellResult> sweep(const std::vector<RunConfig>& grid, int jobs = 1);

// Successful-epoch decoding windows harvested from protocol runs (batch
// workloads drawn from `seed`), for coding-layer experiments.
std::vector<WindowTrace> collect_successful_windows(int kappa, std::size_t count,
                                                    std::uint64_t seed);

void write_report_record(JsonlWriter& sink, const RunReport& r);
std::string report_csv_header();
std::string report_csv_row(const RunReport& r);
std::string report_human(const RunReport& r);

}  // namespace cbsim
