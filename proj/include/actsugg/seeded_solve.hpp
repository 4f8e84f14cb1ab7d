#pragma once

#include <functional>
#include <vector>

#include "actsugg/errors.hpp"
#include "actsugg/policy.hpp"
#include "actsugg/pomdp.hpp"
#include "actsugg/solver.hpp"
#include "actsugg/suggestion.hpp"

namespace actsugg {

/// Suggestion models whose one-step posteriors seed the second solver pass.
inline std::vector<SuggestionModel> default_seed_models() {
    return {SuggestionModel::scaled(0.99), SuggestionModel::scaled(0.75), SuggestionModel::scaled(0.5),
            SuggestionModel::noisy(1.0),   SuggestionModel::noisy(2.0),   SuggestionModel::noisy(5.0)};
}

/// Beliefs reached from `b` by incorporating each possible suggestion under
/// each model, judged against `policy`. Zero-likelihood suggestions are skipped.
inline std::vector<Belief> suggestion_posteriors(const SuggestionContext& ctx, const Belief& b,
                                                 const std::vector<SuggestionModel>& models) {
    std::vector<Belief> out;
    for (const SuggestionModel& sm : models) {
        for (ActionIndex a = 0; a < ctx.num_actions(); ++a) {
            try {
                out.push_back(suggestion_update(b, likelihood(ctx, a, sm)));
            } catch (const ImpossibleSuggestion&) {
            }
        }
    }
    return out;
}

/// Two-pass solve. The first pass gives a policy to build suggestion
/// likelihoods from; the second adds the posteriors of `initial_belief` under
/// every suggestion to the belief set, so the policy is also accurate right
/// after a suggestion arrives. With no models this is a single plain solve.
inline AlphaVectorPolicy solve_with_suggestion_seeds(const DiscretePomdp& model, const Belief& initial_belief,
                                                     SolverParams params, const std::vector<SuggestionModel>& models,
                                                     SolveReport* report = nullptr,
                                                     const std::function<void(const SolveProgress&)>& on_progress =
                                                         {}) {
    AlphaVectorPolicy first = solve(model, initial_belief, params, report, on_progress);
    if (models.empty()) return first;
    const SuggestionContext ctx(model, first, params.threads);
    std::vector<Belief> seeds = suggestion_posteriors(ctx, initial_belief, models);
    params.seed_beliefs.insert(params.seed_beliefs.end(), seeds.begin(), seeds.end());
    return solve(model, initial_belief, params, report, on_progress);
}

} // namespace actsugg
