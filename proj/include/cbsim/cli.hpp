#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cbsim/simcore.hpp"

namespace cbsim {

enum class OutputFormat { Human, Csv, Jsonl };

struct CliCommand {
    enum class Verb { Run, Batch, Sweep, Validate, Replay, VerifyCoding };
    Verb verb = Verb::Run;

    RunConfig run;  // run/batch, and the template for sweep cells
    bool horizon_auto = false;
    std::string out_path;
    OutputFormat format = OutputFormat::Human;

    // sweep
    std::vector<int> sweep_kappas;
    std::vector<std::int64_t> sweep_ns;
    int sweep_seeds = 1;
    int jobs = 1;

    // validate / replay
    std::string trace_path;
    Slot validate_w = 0;
    std::optional<double> rate_override;
    int replay_kappa = 64;
    std::size_t replay_lookback = 0;

    // verify-coding
    std::int64_t trials = 10000;
};

// Thrown when the user asked for --help; carries the text to print.
struct CliHelp {
    std::string text;
};

// Parses argv (program name excluded). Applies defaults (kappa 64, seed 0,
// stride auto), reads --config files (flags win), and falls back to the
// CODED_BACKOFF_SEED environment variable for the seed. Throws
// std::invalid_argument with an actionable message on unknown flags, missing
// values, kappa < 6 for protocol runs, batch n < 1, or w < 16*kappa^2 for
// windowed schedules.
CliCommand parse_command(const std::vector<std::string>& args);

int execute(const CliCommand& cmd, std::ostream& out, std::ostream& err);

// Exit status: 0 success, 1 usage/config/io error, 2 epoch-check violation
// under --strict-lemmas.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cbsim
