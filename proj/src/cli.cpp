#include "cbsim/cli.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "cbsim/coding.hpp"

namespace cbsim {

namespace {

struct RawArgs {
    std::string schedule = "batch";
    std::string format = "human";
    std::string config_path;
    std::int64_t n = 0;
    Slot w = 0;
    double rate = -1;  // <0: use the kappa-derived cap
    Slot arrival_horizon = -1;
};

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
}

bool to_bool(const std::string& v, const std::string& where) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw std::invalid_argument(where + ": expected a boolean, got '" + v + "'");
}

template <typename T>
T to_number(const std::string& v, const std::string& where) {
    try {
        if constexpr (std::is_floating_point_v<T>)
            return T(std::stod(v));
        else if constexpr (std::is_signed_v<T>)
            return T(std::stoll(v));
        else
            return T(std::stoull(v));
    } catch (const std::exception&) {
        throw std::invalid_argument(where + ": expected a number, got '" + v + "'");
    }
}

ArrivalPattern pattern_from(const std::string& s) {
    if (s == "smooth") return ArrivalPattern::Smooth;
    if (s == "bursts") return ArrivalPattern::FrontloadedBursts;
    if (s == "spread") return ArrivalPattern::RandomSpread;
    throw std::invalid_argument("unknown pattern: " + s);
}

OutputFormat format_from(const std::string& s) {
    if (s == "human") return OutputFormat::Human;
    if (s == "csv") return OutputFormat::Csv;
    if (s == "jsonl") return OutputFormat::Jsonl;
    throw std::invalid_argument("unknown format: " + s);
}

void add_run_options(CLI::App* sub, CliCommand& cmd, RawArgs& raw, bool batch_only) {
    sub->add_option("--config", raw.config_path,
                    "config file with 'key = value' lines; flags take precedence");
    sub->add_option("--kappa", cmd.run.kappa, "decoding threshold (>= 6)");
    sub->add_option("--seed", cmd.run.seed, "base seed; all randomness derives from it")
        ->envname("CODED_BACKOFF_SEED");
    sub->add_option("--horizon", cmd.run.horizon, "number of slots to simulate");
    sub->add_option("--n", raw.n, "batch size");
    if (!batch_only) {
        sub->add_option("--schedule", raw.schedule, "batch|smooth|bursts|spread|trace")
            ->check(CLI::IsMember({"batch", "smooth", "bursts", "spread", "trace"}));
        sub->add_option("--w", raw.w, "window size for windowed schedules (>= 16*kappa^2)");
        sub->add_option("--rate", raw.rate,
                        "per-slot arrival cap fraction; overrides the kappa-derived one");
        sub->add_option("--arrival-horizon", raw.arrival_horizon,
                        "stop injecting after this slot (drain tail)");
        sub->add_option("--trace", cmd.trace_path, "arrival trace (CSV 'slot,count')");
    }
    sub->add_flag("--strict-lemmas", cmd.run.strict_lemmas,
                  "abort (exit 2) on any epoch potential-bound violation");
    sub->add_flag("--verify-coding", cmd.run.verify_coding,
                  "run the random-linear-coding layer on every decoding window");
    sub->add_option("--stride", cmd.run.snapshot_stride, "snapshot sampling stride (0 = auto)");
    sub->add_option("--decoder-lookback", cmd.run.decoder_lookback,
                    "good slots the decoder retains (0 = 2*kappa)");
    sub->add_option("--payload-len", cmd.run.payload_len, "coding payload length in bytes");
    sub->add_flag("--continuous-max", cmd.run.continuous_max_backlog,
                  "track max backlog at every slot instead of sampled slots");
    sub->add_option("--out", cmd.out_path, "write the JSONL event stream to this file");
    sub->add_option("--format", raw.format, "human|csv|jsonl")
        ->check(CLI::IsMember({"human", "csv", "jsonl"}));
}

template <typename T>
std::vector<T> split_numbers(const std::string& v, const std::string& where) {
    std::vector<T> out;
    std::stringstream ss(v);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(to_number<T>(trim(tok), where));
    return out;
}

// Fills everything the command line left untouched from a 'key = value' file.
void apply_config_file(CLI::App* sub, CliCommand& cmd, RawArgs& raw) {
    if (raw.config_path.empty()) return;
    std::ifstream in(raw.config_path);
    if (!in) throw std::invalid_argument("cannot open --config file: " + raw.config_path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string text = trim(line);
        if (text.empty() || text[0] == '#') continue;
        auto eq = text.find('=');
        const std::string where = raw.config_path + ":" + std::to_string(line_no);
        if (eq == std::string::npos)
            throw std::invalid_argument(where + ": expected 'key = value'");
        std::string key = trim(text.substr(0, eq));
        std::string value = trim(text.substr(eq + 1));
        const CLI::Option* opt = sub->get_option_no_throw("--" + key);
        if (opt == nullptr) throw std::invalid_argument(where + ": unknown key '" + key + "'");
        if (opt->count() > 0) continue;  // the flag was given; it wins

        if (key == "kappa") cmd.run.kappa = to_number<int>(value, where);
        else if (key == "seed") cmd.run.seed = to_number<std::uint64_t>(value, where);
        else if (key == "horizon") cmd.run.horizon = to_number<Slot>(value, where);
        else if (key == "n") raw.n = to_number<std::int64_t>(value, where);
        else if (key == "schedule") raw.schedule = value;
        else if (key == "w") raw.w = to_number<Slot>(value, where);
        else if (key == "rate") raw.rate = to_number<double>(value, where);
        else if (key == "arrival-horizon") raw.arrival_horizon = to_number<Slot>(value, where);
        else if (key == "trace") cmd.trace_path = value;
        else if (key == "strict-lemmas") cmd.run.strict_lemmas = to_bool(value, where);
        else if (key == "verify-coding") cmd.run.verify_coding = to_bool(value, where);
        else if (key == "stride") cmd.run.snapshot_stride = to_number<int>(value, where);
        else if (key == "decoder-lookback")
            cmd.run.decoder_lookback = to_number<std::size_t>(value, where);
        else if (key == "payload-len") cmd.run.payload_len = to_number<std::size_t>(value, where);
        else if (key == "continuous-max") cmd.run.continuous_max_backlog = to_bool(value, where);
        else if (key == "out") cmd.out_path = value;
        else if (key == "format") raw.format = value;
        else if (key == "kappas") cmd.sweep_kappas = split_numbers<int>(value, where);
        else if (key == "ns") cmd.sweep_ns = split_numbers<std::int64_t>(value, where);
        else if (key == "seeds") cmd.sweep_seeds = to_number<int>(value, where);
        else if (key == "jobs") cmd.jobs = to_number<int>(value, where);
        else throw std::invalid_argument(where + ": unknown key '" + key + "'");
    }
}

void finish_run_config(CliCommand& cmd, RawArgs& raw, bool force_batch) {
    cmd.format = format_from(raw.format);
    if (cmd.run.kappa < 6) throw std::invalid_argument("kappa must be >= 6 for protocol runs");

    const std::string schedule = force_batch ? "batch" : raw.schedule;
    if (schedule == "batch") {
        if (raw.n < 1) throw std::invalid_argument("batch schedules need --n >= 1");
        cmd.run.schedule = ScheduleSpec::batch(raw.n);
        if (cmd.run.horizon < 1) {
            // enough room to drain the batch with a wide margin
            double deadline = 4.0 * cmd.run.kappa + double(raw.n) * (1.0 + 10.0 / cmd.run.kappa);
            cmd.run.horizon = 2 * Slot(std::ceil(deadline)) + 64;
            cmd.horizon_auto = true;
        }
    } else if (schedule == "trace") {
        if (cmd.trace_path.empty()) throw std::invalid_argument("trace schedules need --trace");
        cmd.run.schedule = ScheduleSpec::trace(cmd.trace_path);
    } else {
        const Slot min_w = 16 * Slot(cmd.run.kappa) * Slot(cmd.run.kappa);
        if (raw.w < min_w)
            throw std::invalid_argument("windowed schedules need --w >= 16*kappa^2 (= " +
                                        std::to_string(min_w) + ")");
        std::optional<double> rate;
        if (raw.rate >= 0) rate = raw.rate;
        cmd.run.schedule =
            ScheduleSpec::windowed(raw.w, pattern_from(schedule), rate, raw.arrival_horizon);
    }
    if (cmd.run.horizon < 1)
        throw std::invalid_argument("missing --horizon (number of slots to simulate)");
}

}  // namespace

CliCommand parse_command(const std::vector<std::string>& args) {
    CliCommand cmd;
    RawArgs raw_run, raw_batch, raw_sweep;

    CLI::App app{"discrete-slot simulator for epoch-based backoff on coded radio channels"};
    app.require_subcommand(1);

    auto* run_cmd = app.add_subcommand("run", "simulate one seeded run");
    add_run_options(run_cmd, cmd, raw_run, false);

    auto* batch_cmd = app.add_subcommand("batch", "simulate a single batch arrival at slot 0");
    add_run_options(batch_cmd, cmd, raw_batch, true);

    auto* sweep_cmd = app.add_subcommand("sweep", "run a grid of independent cells");
    add_run_options(sweep_cmd, cmd, raw_sweep, false);
    sweep_cmd->add_option("--kappas", cmd.sweep_kappas, "comma-separated kappa list")
        ->delimiter(',');
    sweep_cmd->add_option("--ns", cmd.sweep_ns, "comma-separated batch sizes")->delimiter(',');
    sweep_cmd->add_option("--seeds", cmd.sweep_seeds, "number of seeds per cell (derived from --seed)");
    sweep_cmd->add_option("--jobs", cmd.jobs, "worker threads");

    auto* validate_cmd = app.add_subcommand("validate", "check an arrival trace against the window cap");
    validate_cmd->add_option("--trace", cmd.trace_path, "arrival trace (CSV 'slot,count')")
        ->required();
    validate_cmd->add_option("--w", cmd.validate_w, "window size")->required();
    validate_cmd->add_option("--kappa", cmd.run.kappa, "decoding threshold");
    double validate_rate = -1;
    validate_cmd->add_option("--rate", validate_rate, "explicit cap fraction");

    auto* replay_cmd = app.add_subcommand("replay", "replay a slot trace through the decoder");
    replay_cmd->add_option("--trace", cmd.trace_path, "slot trace ('t,<id;id;...>' lines)")
        ->required();
    replay_cmd->add_option("--kappa", cmd.replay_kappa, "decoding threshold (>= 1)");
    replay_cmd->add_option("--decoder-lookback", cmd.replay_lookback,
                           "good slots the decoder retains (0 = 2*kappa)");
    replay_cmd->add_option("--out", cmd.out_path, "write decoding events as JSONL");

    auto* coding_cmd =
        app.add_subcommand("verify-coding", "singularity rate of random coefficients on real windows");
    coding_cmd->add_option("--kappa", cmd.run.kappa, "decoding threshold (>= 6)");
    coding_cmd->add_option("--trials", cmd.trials, "number of decoding windows to test");
    coding_cmd->add_option("--seed", cmd.run.seed, "base seed")->envname("CODED_BACKOFF_SEED");
    coding_cmd->add_option("--payload-len", cmd.run.payload_len, "payload length in bytes");

    std::vector<const char*> argv;
    argv.push_back("cbsim");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(int(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        std::ostringstream os;
        int code = app.exit(e, os, os);
        std::string text = os.str();
        if (code == 0) throw CliHelp{text};
        while (!text.empty() && text.back() == '\n') text.pop_back();
        throw std::invalid_argument(text);
    }

    if (app.got_subcommand(run_cmd)) {
        cmd.verb = CliCommand::Verb::Run;
        apply_config_file(run_cmd, cmd, raw_run);
        finish_run_config(cmd, raw_run, false);
    } else if (app.got_subcommand(batch_cmd)) {
        cmd.verb = CliCommand::Verb::Batch;
        apply_config_file(batch_cmd, cmd, raw_batch);
        finish_run_config(cmd, raw_batch, true);
    } else if (app.got_subcommand(sweep_cmd)) {
        cmd.verb = CliCommand::Verb::Sweep;
        apply_config_file(sweep_cmd, cmd, raw_sweep);
        if (raw_sweep.format == "human") raw_sweep.format = "csv";
        if (cmd.sweep_ns.empty() && raw_sweep.n >= 1) cmd.sweep_ns.push_back(raw_sweep.n);
        if (!cmd.sweep_ns.empty()) raw_sweep.n = cmd.sweep_ns.front();
        finish_run_config(cmd, raw_sweep, false);
        if (cmd.sweep_kappas.empty()) cmd.sweep_kappas.push_back(cmd.run.kappa);
        for (int k : cmd.sweep_kappas)
            if (k < 6) throw std::invalid_argument("kappa must be >= 6 for protocol runs");
        if (cmd.sweep_seeds < 1) throw std::invalid_argument("--seeds must be >= 1");
        if (cmd.jobs < 1) throw std::invalid_argument("--jobs must be >= 1");
    } else if (app.got_subcommand(validate_cmd)) {
        cmd.verb = CliCommand::Verb::Validate;
        if (cmd.run.kappa < 6) throw std::invalid_argument("kappa must be >= 6");
        if (cmd.validate_w < 1) throw std::invalid_argument("--w must be >= 1");
        if (validate_rate >= 0) cmd.rate_override = validate_rate;
    } else if (app.got_subcommand(replay_cmd)) {
        cmd.verb = CliCommand::Verb::Replay;
        if (cmd.replay_kappa < 1) throw std::invalid_argument("kappa must be >= 1 for replay");
    } else if (app.got_subcommand(coding_cmd)) {
        cmd.verb = CliCommand::Verb::VerifyCoding;
        if (cmd.run.kappa < 6) throw std::invalid_argument("kappa must be >= 6");
        if (cmd.trials < 1) throw std::invalid_argument("--trials must be >= 1");
    }
    return cmd;
}

namespace {

int exec_run(const CliCommand& cmd, std::ostream& out) {
    std::ofstream file;
    std::optional<JsonlWriter> writer;
    if (!cmd.out_path.empty()) {
        file.open(cmd.out_path, std::ios::binary | std::ios::trunc);
        if (!file) throw std::runtime_error("cannot open --out file: " + cmd.out_path);
        writer.emplace(file);
    }
    RunResult res = run(cmd.run, writer ? &*writer : nullptr);
    switch (cmd.format) {
        case OutputFormat::Human: out << report_human(res.report); break;
        case OutputFormat::Csv:
            out << report_csv_header() << "\n" << report_csv_row(res.report) << "\n";
            break;
        case OutputFormat::Jsonl: {
            JsonlWriter w(out);
            write_report_record(w, res.report);
            break;
        }
    }
    return 0;
}

int exec_sweep(const CliCommand& cmd, std::ostream& out, std::ostream& err) {
    std::vector<RunConfig> grid;
    std::vector<std::int64_t> ns = cmd.sweep_ns;
    const bool batch = cmd.run.schedule.kind == ScheduleSpec::Kind::Batch;
    if (!batch) ns = {0};
    if (batch && ns.empty()) throw std::invalid_argument("sweep over batches needs --ns or --n");

    for (int kappa : cmd.sweep_kappas) {
        for (std::int64_t n : ns) {
            for (int s = 0; s < cmd.sweep_seeds; ++s) {
                RunConfig c = cmd.run;
                c.kappa = kappa;
                if (batch) {
                    c.schedule = ScheduleSpec::batch(n);
                    if (cmd.horizon_auto) {
                        double deadline = 4.0 * kappa + double(n) * (1.0 + 10.0 / kappa);
                        c.horizon = 2 * Slot(std::ceil(deadline)) + 64;
                    }
                }
                c.seed = derive_seed(cmd.run.seed, grid.size());
                grid.push_back(std::move(c));
            }
        }
    }

    auto cells = sweep(grid, cmd.jobs);
    bool any_error = false, any_violation = false;
    if (cmd.format == OutputFormat::Csv) out << report_csv_header() << "\n";
    JsonlWriter jw(out);
    for (const auto& cell : cells) {
        if (!cell.report) {
            any_error = true;
            if (cell.error.find("potential bound violated") != std::string::npos)
                any_violation = true;
            err << "# cell " << cell.index << " failed: " << cell.error << "\n";
            continue;
        }
        switch (cmd.format) {
            case OutputFormat::Csv: out << report_csv_row(*cell.report) << "\n"; break;
            case OutputFormat::Jsonl: write_report_record(jw, *cell.report); break;
            case OutputFormat::Human:
                out << "--- cell " << cell.index << "\n" << report_human(*cell.report);
                break;
        }
    }
    if (any_violation) return 2;
    return any_error ? 1 : 0;
}

int exec_validate(const CliCommand& cmd, std::ostream& out) {
    ArrivalSchedule s = load_arrival_trace(cmd.trace_path);
    std::int64_t cap = cmd.rate_override ? window_arrival_cap(cmd.validate_w, *cmd.rate_override)
                                         : window_arrival_cap(cmd.validate_w, cmd.run.kappa);
    auto v = validate_schedule(s, cmd.validate_w, cap);
    if (v) {
        out << "violation at slot " << v->window_start << ": window sum " << v->window_sum
            << " > cap " << v->cap << "\n";
    } else {
        out << "ok: max window sum " << max_window_sum(s, cmd.validate_w) << " <= cap " << cap
            << "\n";
    }
    return 0;
}

int exec_replay(const CliCommand& cmd, std::ostream& out) {
    SlotTrace trace = load_slot_trace(cmd.trace_path, cmd.replay_kappa);
    DecodingDetector det(cmd.replay_kappa, cmd.replay_lookback);
    std::ofstream file;
    std::optional<JsonlWriter> writer;
    if (!cmd.out_path.empty()) {
        file.open(cmd.out_path, std::ios::binary | std::ios::trunc);
        if (!file) throw std::runtime_error("cannot open --out file: " + cmd.out_path);
        writer.emplace(file);
    }
    std::int64_t events = 0;
    for (const auto& slot : trace.slots) {
        auto ev = det.advance(slot);
        if (!ev) continue;
        ++events;
        out << "event size=" << ev->size << " window=[" << ev->window_start << ","
            << ev->window_end << "] packets={";
        for (std::size_t i = 0; i < ev->decoded.size(); ++i) {
            if (i) out << ",";
            out << trace.id_names[ev->decoded[i]];
        }
        out << "}\n";
        if (writer) {
            JsonRecord rec("event");
            rec.field("size", ev->size)
                .field("window_start", ev->window_start)
                .field("window_end", ev->window_end);
            std::string ids = "[";
            for (std::size_t i = 0; i < ev->decoded.size(); ++i) {
                if (i) ids += ',';
                ids += '"' + trace.id_names[ev->decoded[i]] + '"';
            }
            ids += ']';
            rec.raw_field("packets", ids);
            writer->write(rec);
        }
    }
    out << "events: " << events << "\n";
    return 0;
}

int exec_verify_coding(const CliCommand& cmd, std::ostream& out) {
    auto windows =
        collect_successful_windows(cmd.run.kappa, std::size_t(cmd.trials), cmd.run.seed);
    CounterRng coeff_rng(derive_seed(cmd.run.seed, 1, stream_tag::coding));
    CounterRng payload_rng(derive_seed(cmd.run.seed, 1, stream_tag::payload));
    std::int64_t singular = 0, roundtrip_failures = 0;
    for (const auto& w : windows) {
        TransmissionMatrix T = build_matrix(w.good_slots, w.decoded, CoeffMode::Random, coeff_rng);
        MessageVector m = random_messages(T.rows(), cmd.run.payload_len, payload_rng);
        auto dec = decode(received_sums(m, T), T, cmd.run.payload_len);
        if (!dec)
            ++singular;
        else if (!(*dec == m))
            ++roundtrip_failures;
    }
    double rate = double(singular) / double(windows.size());
    out << "trials " << windows.size() << "\n"
        << "singular " << singular << " (rate " << format_double(rate) << ")\n"
        << "round-trip failures " << roundtrip_failures << "\n";
    return roundtrip_failures == 0 ? 0 : 1;
}

}  // namespace

int execute(const CliCommand& cmd, std::ostream& out, std::ostream& err) {
    try {
        switch (cmd.verb) {
            case CliCommand::Verb::Run:
            case CliCommand::Verb::Batch: return exec_run(cmd, out);
            case CliCommand::Verb::Sweep: return exec_sweep(cmd, out, err);
            case CliCommand::Verb::Validate: return exec_validate(cmd, out);
            case CliCommand::Verb::Replay: return exec_replay(cmd, out);
            case CliCommand::Verb::VerifyCoding: return exec_verify_coding(cmd, out);
        }
    } catch (const LemmaViolationError& e) {
        err << "strict-lemmas: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    CliCommand cmd;
    try {
        cmd = parse_command(args);
    } catch (const CliHelp& h) {
        out << h.text;
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return execute(cmd, out, err);
}

}  // namespace cbsim
