#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "rankmctp/dataset.hpp"

namespace rankmctp {

enum class ContrastKind { Tukey, Dunnett, Average, Changepoint, Centering, User };

enum class FactorialEffect { MainA, MainD, Interaction, WholeCell };

// Family of contrast rows with display labels. Every row sums to zero.
struct ContrastFamily {
  Eigen::MatrixXd c;
  std::vector<std::string> labels;
  ContrastKind kind = ContrastKind::User;
};

ContrastKind parse_contrast_kind(const std::string& name);
FactorialEffect parse_effect(const std::string& name);

// One-factor contrast matrix over m levels. `sizes` is required for
// changepoint comparisons and must have m entries.
ContrastFamily build_contrast(ContrastKind kind, int m,
                              const std::vector<int>& sizes = {},
                              const std::vector<std::string>& level_names = {});

// Lift a one-factor family onto the a*d cell grid.
ContrastFamily factorial_contrast(FactorialEffect effect, const ContrastFamily& base,
                                  const Design& design);

// Convenience: build the full cell-level family for a named effect.
ContrastFamily make_effect_contrast(FactorialEffect effect, ContrastKind kind,
                                    const Dataset& data);

// Projection M = C'(CC')⁺C onto the row space of C.
Eigen::MatrixXd projection(const ContrastFamily& c);

// Load a user matrix (TSV, one contrast row per line) for an ad-dimensional design.
ContrastFamily load_contrast_tsv(const std::string& path, int ad);

}  // namespace rankmctp
