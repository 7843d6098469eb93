#pragma once

#include <string>
#include <utility>
#include <vector>

#include "cgzsl/losses/losses.hpp"
#include "cgzsl/model/model.hpp"
#include "support.hpp"

namespace testing {

struct TermError {
  std::string term;
  double value = 0.0;      // loss at the unperturbed parameters
  double max_rel_error = 0.0;
};

/// Finite-difference check of every loss term with respect to all generator
/// and discriminator parameters of a randomly initialized model
/// (d_x=16, d_a=8, hidden=32). Five classes: 0-2 seen, 3-4 unseen.
inline std::vector<TermError> loss_term_gradient_errors(std::uint64_t seed) {
  using namespace cgzsl;
  model::ModelConfig cfg = model::ModelConfig::with_defaults(16, 8);
  cfg.hidden_g = cfg.hidden_d = 32;
  const model::CgzslModel net(cfg, seed);
  std::mt19937_64 rng(seed + 1);

  const std::size_t classes = 5;
  const Matrix attrs = random_matrix(classes, cfg.d_a, rng, 0.0, 1.0);
  const Matrix real_x = random_matrix(9, cfg.d_x, rng, 0.0, 1.0);
  const std::vector<std::size_t> real_labels{0, 1, 2, 0, 1, 2, 0, 1, 2};
  const std::vector<int> real_labels_int(real_labels.begin(), real_labels.end());
  const std::vector<std::size_t> fake_s_labels{0, 1, 2, 0, 1, 2};
  const std::vector<std::size_t> fake_u_labels{3, 4, 3, 4};
  const std::vector<std::size_t> seen_rows{0, 1, 2};
  const Matrix z_s = model::sample_noise(fake_s_labels.size(), cfg.d_z, rng);
  const Matrix z_u = model::sample_noise(fake_u_labels.size(), cfg.d_z, rng);
  const std::vector<int> seen_set{0, 1, 2};
  const Matrix real_means = losses::class_means(real_x, real_labels_int, seen_set);
  const Matrix reference = random_matrix(classes, cfg.d_x, rng, 0.0, 1.0);
  const losses::Neighborhoods hoods = losses::semantic_neighbors(attrs, 2);
  losses::AlignmentConfig band;
  band.epsilon = 0.01;  // narrow band so most hinges are active

  std::vector<Matrix> params;
  for (const auto* p : net.generator().parameters()) params.push_back(*p);
  for (const auto* p : net.discriminator().parameters()) params.push_back(*p);
  const std::size_t n_gen = net.generator().parameters().size();

  struct Forward {
    Var projections, seen_proj, fake_s, fake_u;
  };
  auto forward = [&](Tape& t, const std::vector<Var>& p) {
    const std::vector<Var> gp(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(n_gen));
    const std::vector<Var> dp(p.begin() + static_cast<std::ptrdiff_t>(n_gen), p.end());
    Forward f;
    f.projections = net.discriminator().forward(t.constant(attrs), dp);
    f.seen_proj = select_rows(f.projections, seen_rows);
    f.fake_s = net.generator().forward(
        t.constant(hconcat(z_s, select_rows(attrs, fake_s_labels))), gp);
    f.fake_u = net.generator().forward(
        t.constant(hconcat(z_u, select_rows(attrs, fake_u_labels))), gp);
    return f;
  };
  auto gan = [&](Tape& t, const Forward& f) {
    return losses::gan_loss(t.constant(real_x), select_rows(f.projections, real_labels), f.fake_s,
                            select_rows(f.projections, fake_s_labels));
  };

  const std::vector<std::pair<std::string, LossBuilder>> terms{
      {"L_GAN (D side)", [&](Tape& t, const std::vector<Var>& p) { return gan(t, forward(t, p)).d_loss; }},
      {"L_GAN (G side)", [&](Tape& t, const std::vector<Var>& p) { return gan(t, forward(t, p)).g_loss; }},
      {"L_rcl",
       [&](Tape& t, const std::vector<Var>& p) {
         return losses::classification_loss(t.constant(real_x), real_labels, forward(t, p).seen_proj,
                                            cfg.temperature);
       }},
      {"L_pcl",
       [&](Tape& t, const std::vector<Var>& p) {
         const Forward f = forward(t, p);
         return losses::classification_loss(f.fake_s, fake_s_labels, f.seen_proj, cfg.temperature);
       }},
      {"L_snl",
       [&](Tape& t, const std::vector<Var>& p) {
         const Forward f = forward(t, p);
         return losses::classification_loss(f.fake_u, fake_u_labels, f.projections, cfg.temperature);
       }},
      {"L_sal",
       [&](Tape& t, const std::vector<Var>& p) {
         const Forward f = forward(t, p);
         std::vector<std::size_t> group(fake_s_labels);
         group.insert(group.end(), fake_u_labels.begin(), fake_u_labels.end());
         const Var means = segment_mean(l2_normalize_rows(vconcat(f.fake_s, f.fake_u)), group, classes);
         return losses::semantic_alignment_loss(means, reference, hoods, band);
       }},
      {"L_nuclear",
       [&](Tape& t, const std::vector<Var>& p) {
         return losses::nuclear_loss(real_means, forward(t, p).seen_proj);
       }},
  };

  std::vector<TermError> out;
  for (const auto& [name, build] : terms) {
    Tape tape;
    std::vector<Var> vars;
    for (const auto& m : params) vars.push_back(tape.parameter(m));
    const double value = build(tape, vars).scalar();
    out.push_back({name, value, max_grad_rel_error(params, build)});
  }
  return out;
}

}  // namespace testing
