// SPDX-License-Identifier: Apache-2.0
//
// dsvd: compress a fine-tuned checkpoint against its base as per-layer
// low-rank deltas, and rebuild it again.
//
// Exit codes: 0 success, 1 pipeline error, 2 usage error, 3 verify tolerance exceeded.
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "dsvd/delta.hpp"
#include "dsvd/error.hpp"
#include "dsvd/parallel.hpp"
#include "dsvd/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPipeline = 1;
constexpr int kExitUsage = 2;
constexpr int kExitTolerance = 3;

int usage_error(const std::string& message) {
  std::cerr << "usage error: " << message << "\n";
  return kExitUsage;
}

int pipeline_error(std::string_view code, const std::string& message) {
  std::cerr << nlohmann::json{{"error", code}, {"message", message}}.dump() << "\n";
  return kExitPipeline;
}

void emit(const nlohmann::ordered_json& doc) { std::cout << doc.dump(2) << "\n"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Low-rank delta compression for fine-tuned checkpoints"};
  app.require_subcommand(1);

  std::string base, finetuned, out, delta, groups;
  double tau = 0.0;
  std::string policy = "strict";
  std::string energy_mode = "linear";
  std::size_t threads = 0;
  bool force = false;
  double tol = 1e-3;

  auto* compress = app.add_subcommand("compress", "Compress finetuned - base into a .dsvd archive");
  compress->add_option("--base", base, "Base checkpoint")->required();
  compress->add_option("--finetuned", finetuned, "Fine-tuned checkpoint")->required();
  compress->add_option("--tau", tau, "Energy threshold in (0, 1]")->required();
  compress->add_option("--out", out, "Output archive")->required();
  compress->add_option("--policy", policy, "strict|skip")->check(CLI::IsMember({"strict", "skip"}));
  compress->add_option("--energy-mode", energy_mode, "linear|squared")->check(CLI::IsMember({"linear", "squared"}));
  compress->add_option("--threads", threads, "Worker threads (0 = DSVD_THREADS or all cores)");

  auto* reconstruct = app.add_subcommand("reconstruct", "Rebuild the fine-tuned checkpoint");
  reconstruct->add_option("--base", base, "Base checkpoint")->required();
  reconstruct->add_option("--delta", delta, "Archive")->required();
  reconstruct->add_option("--out", out, "Output checkpoint")->required();
  reconstruct->add_flag("--force", force, "Skip the base fingerprint check");

  auto* inspect = app.add_subcommand("inspect", "Summarize an archive");
  inspect->add_option("--delta", delta, "Archive")->required();
  inspect->add_option("--groups", groups, "Layer group spec (JSON)");

  auto* diff = app.add_subcommand("diff", "Per-layer cosine similarity of two checkpoints");
  diff->add_option("--base", base, "Base checkpoint")->required();
  diff->add_option("--finetuned", finetuned, "Fine-tuned checkpoint")->required();

  auto* verify = app.add_subcommand("verify", "Measure reconstruction error against the fine-tuned checkpoint");
  verify->add_option("--base", base, "Base checkpoint")->required();
  verify->add_option("--finetuned", finetuned, "Fine-tuned checkpoint")->required();
  verify->add_option("--delta", delta, "Archive")->required();
  verify->add_option("--tol", tol, "Maximum per-layer relative Frobenius error");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return usage_error(e.what());
  }

  try {
    if (compress->parsed()) {
      if (!(tau > 0.0 && tau <= 1.0)) return usage_error("--tau must lie in (0, 1], got " + std::to_string(tau));
      dsvd::CompressOptions options;
      options.tau = tau;
      options.policy = policy == "skip" ? dsvd::MismatchPolicy::SkipMismatched : dsvd::MismatchPolicy::Strict;
      options.energy_mode = dsvd::parse_energy_mode(energy_mode);
      options.threads = dsvd::resolve_threads(threads);
      const auto report = dsvd::pipeline::compress_files(base, finetuned, out, options);
      if (report.at("mismatch_warnings").get<std::size_t>() > 0)
        std::cerr << "warning: " << report.at("mismatch_warnings").get<std::size_t>()
                  << " layer(s) present in only one checkpoint were recorded without a delta\n";
      emit(report);
    } else if (reconstruct->parsed()) {
      const auto outcome =
          dsvd::pipeline::reconstruct_files(base, delta, out, force, dsvd::resolve_threads(0));
      if (!outcome.fingerprint_matched)
        std::cerr << "warning: base fingerprint does not match the archive; reconstructed anyway (--force)\n";
      emit({{"output", out}, {"fingerprint_matched", outcome.fingerprint_matched}});
    } else if (inspect->parsed()) {
      std::optional<std::filesystem::path> spec;
      if (!groups.empty()) spec = groups;
      emit(dsvd::pipeline::inspect_file(delta, spec));
    } else if (diff->parsed()) {
      emit(dsvd::pipeline::diff_files(base, finetuned));
    } else if (verify->parsed()) {
      if (!(tol >= 0.0)) return usage_error("--tol must be non-negative");
      const auto outcome = dsvd::pipeline::verify_files(base, finetuned, delta, tol, dsvd::resolve_threads(0));
      emit(outcome.report);
      if (!outcome.within_tolerance) {
        std::cerr << "verify: maximum relative error exceeds --tol " << tol << "\n";
        return kExitTolerance;
      }
    }
  } catch (const dsvd::Error& e) {
    return pipeline_error(dsvd::to_string(e.code()), e.what());
  } catch (const std::exception& e) {
    return pipeline_error("InternalError", e.what());
  }
  return kExitOk;
}
