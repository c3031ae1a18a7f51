#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "assocmem/commands.hpp"
#include "assocmem/config.hpp"
#include "assocmem/errors.hpp"

namespace {

std::string keys_footer(const std::string& command) {
  const auto sections = assocmem::sections_for_command(command);
  std::string out = "Config keys (file sections in brackets, or --set section.key=value):\n";
  for (const auto& section : sections) {
    out += section.empty() ? "  [top level]\n" : "  [" + section + "]\n";
    for (const auto& k : assocmem::config_schema()) {
      const auto dot = k.key.find('.');
      const std::string key_section = dot == std::string::npos ? "" : k.key.substr(0, dot);
      if (key_section != section) continue;
      out += "    " + k.key + " (default: " + (k.default_value.empty() ? "\"\"" : k.default_value) + ")\n";
      out += "        " + k.help + "\n";
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Associative-memory capacity experiments: training sweeps, replica theory and spectra"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(assocmem::code_version()));

  std::vector<std::string> config_files;
  std::vector<std::string> assignments;
  std::string out_dir = "out";
  std::string seed;
  std::string threads;
  std::string precision;
  bool dump_config = false;

  std::map<std::string, CLI::App*> subcommands;
  for (const auto& name : assocmem::command_names()) {
    CLI::App* sub = app.add_subcommand(name, std::string(assocmem::command_summary(name)));
    sub->add_option("--config", config_files, "config file (INI text or a manifest.json); repeatable");
    sub->add_option("--set", assignments, "override one key, e.g. --set train.lr=0.02; repeatable");
    sub->add_option("--out", out_dir, "output directory")->capture_default_str();
    sub->add_option("--seed", seed, "master seed (overrides master_seed)");
    sub->add_option("--threads", threads, "worker threads, 0 for all cores (overrides threads)");
    sub->add_option("--precision", precision, "f32 or f64 (overrides precision)");
    sub->add_flag("--dump-config", dump_config, "print the effective config and exit");
    sub->footer(keys_footer(name));
    subcommands[name] = sub;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : assocmem::kExitConfig;
  }

  std::string command;
  for (const auto& [name, sub] : subcommands) {
    if (sub->parsed()) command = name;
  }

  assocmem::CommandContext ctx;
  ctx.out_dir = out_dir;
  ctx.log = &std::cerr;
  try {
    for (const auto& file : config_files) ctx.config.merge_file(file);
    for (const auto& a : assignments) ctx.config.set_assignment(a);
    if (!seed.empty()) ctx.config.set("master_seed", seed);
    if (!threads.empty()) ctx.config.set("threads", threads);
    if (!precision.empty()) ctx.config.set("precision", precision);
  } catch (const assocmem::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return assocmem::kExitConfig;
  } catch (const assocmem::IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return assocmem::kExitIo;
  }
  if (dump_config) {
    std::cout << ctx.config.to_text(assocmem::sections_for_command(command));
    return assocmem::kExitOk;
  }
  return assocmem::run_command(command, ctx, std::cerr);
}
