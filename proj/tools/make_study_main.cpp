#include <iostream>

#include <CLI11.hpp>

#include "synthetic_study.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Write a synthetic study for the lexpsy pipeline"};
  std::string dir;
  lexpsy::study::StudyOptions o;
  app.add_option("dir", dir, "Output directory")->required();
  app.add_option("--agents", o.agents, "Population size")->check(CLI::Range(10, 100000));
  app.add_option("--noise", o.noise_sd, "Response noise SD")->check(CLI::NonNegativeNumber);
  app.add_option("--seed", o.seed, "Seed");
  CLI11_PARSE(app, argc, argv);
  try {
    lexpsy::study::write_study(dir, o);
  } catch (const std::exception& e) {
    std::cerr << "make_study: " << e.what() << "\n";
    return 1;
  }
  std::cout << dir << "/config.json\n";
  return 0;
}
