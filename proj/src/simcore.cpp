#include "cbsim/simcore.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <sstream>
#include <thread>

#include "cbsim/coding.hpp"

namespace cbsim {

ScheduleSpec ScheduleSpec::batch(std::int64_t n) {
    ScheduleSpec s;
    s.kind = Kind::Batch;
    s.n = n;
    return s;
}

ScheduleSpec ScheduleSpec::windowed(Slot w, ArrivalPattern p, std::optional<double> rate,
                                    Slot arrival_horizon) {
    ScheduleSpec s;
    s.kind = Kind::Windowed;
    s.w = w;
    s.pattern = p;
    s.rate = rate;
    s.arrival_horizon = arrival_horizon;
    return s;
}

ScheduleSpec ScheduleSpec::trace(std::string path) {
    ScheduleSpec s;
    s.kind = Kind::Trace;
    s.trace_path = std::move(path);
    return s;
}

ScheduleSpec ScheduleSpec::explicit_arrivals(ArrivalSchedule sched) {
    ScheduleSpec s;
    s.kind = Kind::Explicit;
    s.explicit_schedule = std::move(sched);
    return s;
}

bool is_sparse(const PotentialSnapshot& s, int kappa) {
    const double k = double(kappa);
    return s.phi <= 6.0 * k && s.c_t < std::pow(k, 0.25) && s.p_min >= 1.0 / std::sqrt(k);
}

std::vector<SparseEvent> detect_sparse_events(const std::vector<PotentialSnapshot>& snapshots,
                                              int kappa) {
    std::vector<SparseEvent> out;
    for (const auto& s : snapshots)
        if (is_sparse(s, kappa)) out.push_back(SparseEvent{s.slot, s.phi, s.c_t, s.p_min});
    return out;
}

namespace {

struct ResolvedSchedule {
    ArrivalSchedule schedule;
    const char* name;
};

ResolvedSchedule resolve_schedule(const RunConfig& cfg) {
    switch (cfg.schedule.kind) {
        case ScheduleSpec::Kind::Batch:
            return {batch_schedule(cfg.schedule.n), "batch"};
        case ScheduleSpec::Kind::Windowed: {
            Slot arrivals_until = cfg.schedule.arrival_horizon < 0
                                      ? cfg.horizon
                                      : std::min(cfg.schedule.arrival_horizon, cfg.horizon);
            return {windowed_rate_schedule(cfg.schedule.w, cfg.kappa, arrivals_until,
                                           cfg.schedule.pattern,
                                           derive_seed(cfg.seed, 0, stream_tag::schedule),
                                           cfg.schedule.rate),
                    to_string(cfg.schedule.pattern)};
        }
        case ScheduleSpec::Kind::Trace:
            return {load_arrival_trace(cfg.schedule.trace_path), "trace"};
        case ScheduleSpec::Kind::Explicit:
            return {cfg.schedule.explicit_schedule, "explicit"};
    }
    throw std::logic_error("resolve_schedule: bad kind");
}

void emit_event(JsonlWriter& sink, const DecodingEvent& ev) {
    JsonRecord rec("event");
    rec.field("size", ev.size)
        .field("window_start", ev.window_start)
        .field("window_end", ev.window_end);
    std::string ids = "[";
    for (std::size_t i = 0; i < ev.decoded.size(); ++i) {
        if (i) ids += ',';
        ids += std::to_string(ev.decoded[i]);
    }
    ids += ']';
    rec.raw_field("packets", ids);
    sink.write(rec);
}

void emit_epoch(JsonlWriter& sink, Slot start, const EpochOutcome& out, bool is_error) {
    JsonRecord rec("epoch");
    rec.field("start", start)
        .field("length", out.length)
        .field("outcome", to_string(out.kind))
        .field("joiners", std::int64_t(out.joiners.size()))
        .field("arrivals", out.arrivals_during)
        .field("error", is_error);
    sink.write(rec);
}

void emit_verdict(JsonlWriter& sink, Slot start, const EpochDeltaVerdict& v) {
    JsonRecord rec("verdict");
    rec.field("epoch_start", start)
        .field("outcome", to_string(v.epoch_kind))
        .field("error", v.is_error_epoch)
        .field("length", v.context.length)
        .field("arrivals", v.context.arrivals)
        .field("delta_phi", v.delta_phi)
        .field("bound", v.bound)
        .field("satisfied", v.satisfied);
    sink.write(rec);
}

void emit_sparse(JsonlWriter& sink, const SparseEvent& s) {
    JsonRecord rec("sparse");
    rec.field("t", s.slot).field("phi", s.phi).field("contention", s.contention).field(
        "p_min", s.p_min);
    sink.write(rec);
}

void emit_slot(JsonlWriter& sink, Slot t, SlotClass cls, std::size_t transmitters,
               const PotentialSnapshot& s, std::int64_t backlog) {
    JsonRecord rec("slot");
    rec.field("t", t)
        .field("class", to_string(cls))
        .field("transmitters", std::int64_t(transmitters))
        .field("backlog", backlog)
        .field("m", s.m_t)
        .field("c", s.c_t)
        .field("phi", s.phi);
    sink.write(rec);
}

std::string describe_violation(Slot start, const EpochDeltaVerdict& v) {
    std::ostringstream os;
    os << "epoch potential bound violated: start=" << start << " kind=" << to_string(v.epoch_kind)
       << " error=" << (v.is_error_epoch ? "yes" : "no") << " length=" << v.context.length
       << " arrivals=" << v.context.arrivals << " delta_phi=" << v.delta_phi
       << " bound=" << v.bound << " phi_before=" << v.context.phi_before
       << " c_before=" << v.context.c_before << " p_min_before=" << v.context.p_min_before;
    return os.str();
}

}  // namespace

RunResult run(const RunConfig& cfg, JsonlWriter* sink) {
    if (cfg.kappa < 6) throw std::invalid_argument("run: kappa must be >= 6");
    if (cfg.horizon < 1) throw std::invalid_argument("run: horizon must be >= 1");
    if (cfg.horizon > 1'000'000'000) throw std::invalid_argument("run: horizon too large");
    if (cfg.payload_len < 1) throw std::invalid_argument("run: payload_len must be >= 1");
    if (cfg.snapshot_stride < 0) throw std::invalid_argument("run: stride must be >= 0");

    const auto t_begin = std::chrono::steady_clock::now();
    const int kappa = cfg.kappa;
    const Slot stride =
        cfg.snapshot_stride > 0 ? cfg.snapshot_stride : (cfg.horizon <= 1'000'000 ? 1 : 16);

    ResolvedSchedule rs = resolve_schedule(cfg);
    const ArrivalSchedule& sched = rs.schedule;

    RunResult result;
    RunReport& report = result.report;
    report.kappa = kappa;
    report.horizon = cfg.horizon;
    report.seed = cfg.seed;
    report.w = sched.window_w.value_or(0);
    report.schedule_name = rs.name;

    ProtocolState st(kappa, derive_seed(cfg.seed, 0, stream_tag::protocol));
    const bool capture_windows = cfg.verify_coding || cfg.collect_details;
    DecodingDetector det(kappa, cfg.decoder_lookback, capture_windows);
    CounterRng coding_rng(derive_seed(cfg.seed, 0, stream_tag::coding));
    CounterRng payload_rng(derive_seed(cfg.seed, 0, stream_tag::payload));

    PotentialSnapshot prev = snapshot(st, -1);
    PotentialSnapshot epoch_before = prev;
    Slot epoch_start = 0;
    std::int64_t epoch_arrival_base = 0;

    auto arrivals_it = sched.arrivals.begin();
    for (Slot t = 0; t < cfg.horizon; ++t) {
        const std::int64_t arrivals_before_slot = st.arrivals_total();
        while (arrivals_it != sched.arrivals.end() && arrivals_it->first == t) {
            st.inject(arrivals_it->second, t);
            ++arrivals_it;
        }

        if (!st.epoch_in_progress()) {
            epoch_before = prev;
            epoch_start = t;
            epoch_arrival_base = arrivals_before_slot;
            st.begin_epoch();
        }
        const auto& joiners = st.current_joiners();
        const std::size_t transmitters = joiners.size();  // joiners move out on epoch end
        const SlotClass cls = classify_slot(transmitters, kappa);
        auto ev = det.advance(t, cls, joiners);
        auto kind = st.advance_epoch_slot();

        // The decoder runs on the raw transmission trace; its events must land
        // exactly on the protocol's successful epochs.
        const bool success_now = kind.has_value() && *kind == EpochKind::Successful;
        if (ev.has_value() != success_now) {
            ++report.decoder_mismatches;
        } else if (ev && (ev->decoded != joiners || ev->window_start != epoch_start ||
                          ev->window_end != t)) {
            ++report.decoder_mismatches;
        }
        if (ev) {
            ++report.decoding_events;
            if (sink) emit_event(*sink, *ev);
            if (cfg.verify_coding && det.last_event_window().size() == ev->decoded.size()) {
                TransmissionMatrix T =
                    build_matrix(det.last_event_window(), ev->decoded, CoeffMode::Random, coding_rng);
                MessageVector msgs = random_messages(T.rows(), cfg.payload_len, payload_rng);
                auto dec = decode(received_sums(msgs, T), T, cfg.payload_len);
                ++report.coding_checked;
                if (!dec)
                    ++report.coding_singular;
                else if (!(*dec == msgs))
                    ++report.coding_roundtrip_failures;
            }
            if (cfg.collect_details) {
                result.events.push_back(*ev);
                result.windows.push_back(WindowTrace{det.last_event_window(), ev->decoded});
            }
        }

        PotentialSnapshot now;
        if (kind) {
            ActivationBreakdown breakdown;
            EpochOutcome out = st.apply_updates(*kind, t, &breakdown);
            out.arrivals_during = st.arrivals_total() - epoch_arrival_base;
            now = snapshot(st, t);
            const bool err = is_error_epoch(epoch_before.c_t, *kind, kappa);
            EpochContext ctx{kappa,           out.length,         out.arrivals_during,
                             epoch_before.phi, epoch_before.c_t, epoch_before.p_min};
            EpochDeltaVerdict verdict = check_epoch_delta(epoch_before, now, *kind, err, ctx);

            ++report.epochs;
            switch (*kind) {
                case EpochKind::Silent: ++report.silent_epochs; break;
                case EpochKind::Successful: ++report.successful_epochs; break;
                case EpochKind::Overfull: ++report.overfull_epochs; break;
            }
            if (err) ++report.error_epochs;
            ++report.verdicts.checked;
            if (verdict.satisfied) {
                ++report.verdicts.satisfied;
            } else {
                if (report.verdicts.violations.size() < 64)
                    report.verdicts.violations.push_back(verdict);
                if (cfg.strict_lemmas)
                    throw LemmaViolationError(describe_violation(epoch_start, verdict), verdict,
                                              epoch_start);
            }
            if (sink) {
                emit_epoch(*sink, epoch_start, out, err);
                emit_verdict(*sink, epoch_start, verdict);
            }
            if (cfg.collect_details) {
                EpochRecord rec;
                rec.start = epoch_start;
                rec.outcome = std::move(out);
                rec.is_error = err;
                rec.before = epoch_before;
                rec.after = now;
                rec.verdict = verdict;
                rec.activation = breakdown;
                result.epochs.push_back(std::move(rec));
            }
        } else {
            now = snapshot(st, t);
        }

        if (st.arrivals_total() != st.delivered_total() + st.in_system())
            throw std::logic_error("run: packet conservation violated");

        if (is_sparse(now, kappa)) {
            ++report.sparse_events;
            SparseEvent sp{t, now.phi, now.c_t, now.p_min};
            if (sink) emit_sparse(*sink, sp);
            if (cfg.collect_details) result.sparse.push_back(sp);
        }

        const std::int64_t backlog = st.in_system();
        if (cfg.continuous_max_backlog) report.max_backlog = std::max(report.max_backlog, backlog);
        if (t % stride == 0) {
            if (!cfg.continuous_max_backlog)
                report.max_backlog = std::max(report.max_backlog, backlog);
            if (cfg.keep_backlog_samples) report.backlog_samples.emplace_back(t, backlog);
            if (sink) emit_slot(*sink, t, cls, transmitters, now, backlog);
        }
        prev = now;
    }

    report.arrivals = st.arrivals_total();
    report.delivered = st.delivered_total();
    report.censored = st.in_system();
    report.last_delivery_slot = st.last_delivery_slot();
    report.throughput = double(report.delivered) / double(report.horizon);
    report.error_epoch_rate =
        report.epochs > 0 ? double(report.error_epochs) / double(report.epochs) : 0.0;

    auto lats = st.delivered_latencies();
    if (!lats.empty()) {
        std::sort(lats.begin(), lats.end());
        auto rank = [&](double q) {
            std::size_t idx = std::size_t(std::ceil(q * double(lats.size())));
            return lats[std::min(lats.size() - 1, idx == 0 ? 0 : idx - 1)];
        };
        report.latency.p50 = rank(0.50);
        report.latency.p99 = rank(0.99);
        report.latency.max = lats.back();
    }

    report.wall_clock_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_begin)
            .count();
    if (sink) write_report_record(*sink, report);
    return result;
}

std::vector<CellResult> sweep(const std::vector<RunConfig>& grid, int jobs) {
    if (grid.empty()) throw std::invalid_argument("sweep: empty grid");
    jobs = std::max(1, jobs);
    std::vector<CellResult> results(grid.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= grid.size()) return;
            results[i].index = i;
            try {
                results[i].report = run(grid[i]).report;
            } catch (const std::exception& e) {
                results[i].error = e.what();
            }
        }
    };
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return results;
}

std::vector<WindowTrace> collect_successful_windows(int kappa, std::size_t count,
                                                    std::uint64_t seed) {
    std::vector<WindowTrace> out;
    out.reserve(count);
    const std::int64_t n = 32 * std::int64_t(kappa);
    for (std::uint64_t idx = 0; out.size() < count; ++idx) {
        if (idx > 100'000) throw std::runtime_error("collect_successful_windows: not converging");
        RunConfig cfg;
        cfg.kappa = kappa;
        cfg.horizon = 64 * Slot(kappa) + 2 * n;
        cfg.seed = derive_seed(seed, idx, stream_tag::coding);
        cfg.schedule = ScheduleSpec::batch(n);
        cfg.collect_details = true;
        RunResult res = run(cfg);
        for (auto& w : res.windows) {
            out.push_back(std::move(w));
            if (out.size() == count) break;
        }
    }
    return out;
}

void write_report_record(JsonlWriter& sink, const RunReport& r) {
    JsonRecord rec("report");
    rec.field("kappa", r.kappa)
        .field("horizon", r.horizon)
        .field("seed", std::uint64_t(r.seed))
        .field("w", r.w)
        .field("schedule", r.schedule_name)
        .field("arrivals", r.arrivals)
        .field("delivered", r.delivered)
        .field("censored", r.censored)
        .field("max_backlog", r.max_backlog)
        .field("p50", r.latency.p50)
        .field("p99", r.latency.p99)
        .field("max_latency", r.latency.max)
        .field("silent", r.silent_epochs)
        .field("successful", r.successful_epochs)
        .field("overfull", r.overfull_epochs)
        .field("epochs", r.epochs)
        .field("error_epochs", r.error_epochs)
        .field("error_epoch_rate", r.error_epoch_rate)
        .field("sparse_events", r.sparse_events)
        .field("verdicts_checked", r.verdicts.checked)
        .field("verdicts_satisfied", r.verdicts.satisfied)
        .field("decoding_events", r.decoding_events)
        .field("decoder_mismatches", r.decoder_mismatches)
        .field("coding_checked", r.coding_checked)
        .field("coding_singular", r.coding_singular)
        .field("coding_roundtrip_failures", r.coding_roundtrip_failures)
        .field("last_delivery_slot", r.last_delivery_slot)
        .field("throughput", r.throughput);
    sink.write(rec);
}

std::string report_csv_header() {
    return "kappa,w,seed,horizon,arrivals,delivered,max_backlog,p50,p99,max_latency,silent,"
           "successful,overfull,error_epochs,throughput";
}

std::string report_csv_row(const RunReport& r) {
    std::string row;
    row += std::to_string(r.kappa);
    row += ',';
    row += std::to_string(r.w);
    row += ',';
    row += std::to_string(r.seed);
    row += ',';
    row += std::to_string(r.horizon);
    row += ',';
    row += std::to_string(r.arrivals);
    row += ',';
    row += std::to_string(r.delivered);
    row += ',';
    row += std::to_string(r.max_backlog);
    row += ',';
    row += std::to_string(r.latency.p50);
    row += ',';
    row += std::to_string(r.latency.p99);
    row += ',';
    row += std::to_string(r.latency.max);
    row += ',';
    row += std::to_string(r.silent_epochs);
    row += ',';
    row += std::to_string(r.successful_epochs);
    row += ',';
    row += std::to_string(r.overfull_epochs);
    row += ',';
    row += std::to_string(r.error_epochs);
    row += ',';
    row += format_double(r.throughput);
    return row;
}

std::string report_human(const RunReport& r) {
    std::ostringstream os;
    os << "kappa            " << r.kappa << "\n"
       << "schedule         " << r.schedule_name << (r.w > 0 ? " (w=" + std::to_string(r.w) + ")" : "")
       << "\n"
       << "seed             " << r.seed << "\n"
       << "horizon          " << r.horizon << "\n"
       << "arrivals         " << r.arrivals << "\n"
       << "delivered        " << r.delivered << "\n"
       << "censored         " << r.censored << "\n"
       << "max backlog      " << r.max_backlog << "\n"
       << "latency p50/p99  " << r.latency.p50 << "/" << r.latency.p99 << " (max " << r.latency.max
       << ")\n"
       << "epochs           " << r.epochs << " (silent " << r.silent_epochs << ", successful "
       << r.successful_epochs << ", overfull " << r.overfull_epochs << ")\n"
       << "error epochs     " << r.error_epochs << " (rate " << format_double(r.error_epoch_rate)
       << ")\n"
       << "sparse events    " << r.sparse_events << "\n"
       << "epoch checks     " << r.verdicts.satisfied << "/" << r.verdicts.checked << " satisfied\n"
       << "decoding events  " << r.decoding_events << " (mismatches " << r.decoder_mismatches
       << ")\n";
    if (r.coding_checked > 0)
        os << "coding checks    " << r.coding_checked << " (singular " << r.coding_singular
           << ", round-trip failures " << r.coding_roundtrip_failures << ")\n";
    os << "throughput       " << format_double(r.throughput) << "\n"
       << "wall clock       " << format_double(r.wall_clock_ms) << " ms\n";
    return os.str();
}

}  // namespace cbsim
