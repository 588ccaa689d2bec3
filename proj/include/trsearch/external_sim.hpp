#pragma once

#include <regex>

#include "trsearch/environment.hpp"

namespace trsearch {

// Drives an out-of-process simulator: instantiate the netlist template with
// raw variable values and corner parameters, run the command in a scratch
// directory, pull measurements out of its output with one regex per
// measurement (first capture group). A failed run, a timeout, a missing
// match or a non-finite value all come back as a failed EvalResult carrying
// the reason; nothing is ever invented.
class ExternalSimulator : public Environment {
 public:
  ExternalSimulator(ProblemSpec problem, ExternalSettings settings, std::string work_dir);

 protected:
  EvalResult compute(const Sizing& s, std::size_t corner) override;
  int max_parallel() const override { return settings_.max_parallel; }

 private:
  std::string substitute(const std::string& text, const Sizing& s, std::size_t corner,
                         const std::string& netlist_path) const;

  ExternalSettings settings_;
  std::string work_dir_;
  std::string template_text_;
  std::vector<std::pair<std::size_t, std::regex>> patterns_;  // measurement index -> regex
};

}  // namespace trsearch
