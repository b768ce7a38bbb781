// Writes the seeded synthetic six-class set as a CSV that `econet train`
// reads with the default schema.
#include <CLI11.hpp>

#include <iostream>

#include "econet/error.hpp"
#include "econet/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Write a synthetic flow-record CSV."};
  econet::SyntheticConfig config;
  std::string out_path;
  bool unlabeled = false;
  app.add_option("output", out_path, "CSV path to write")->required();
  app.add_option("--count", config.count, "number of rows")->capture_default_str();
  app.add_option("--noise", config.noise, "per-step noise stddev")->capture_default_str();
  app.add_option("--seed", config.seed, "random seed")->capture_default_str();
  app.add_flag("--unlabeled", unlabeled, "omit the category columns");
  CLI11_PARSE(app, argc, argv);
  try {
    const auto records = econet::make_synthetic(config);
    econet::write_csv(out_path, records, !unlabeled);
  } catch (const econet::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
