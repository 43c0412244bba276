// Hidden-profile twenty-questions generator and scorer.  Forty candidate
// items with three numeric attributes are split ten-per-member; play
// proceeds by attribute-threshold yes/no questions until one item is
// left.  Question quality q in [0,1] biases the chosen split away from
// the optimal half-split, which is the synthetic stand-in for withheld
// information.  Attribute ranges and the quality-to-bias mapping are
// project fixtures, not measured values.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "turnmjp/catalog.hpp"
#include "turnmjp/errors.hpp"
#include "turnmjp/rng.hpp"

namespace turnmjp {

constexpr int kGameItems = 40;
constexpr int kGameMembers = 4;
constexpr int kQuestionLimit = 30;

struct Item {
    double height_cm = 0.0;  // 150 - 200
    double weight_kg = 0.0;  // 45 - 110
    double test_score = 0.0; // 0 - 100
    SpeakerId owner = 0;
};

inline double attribute_value(const Item& item, int attribute) {
    switch (attribute) {
        case 0: return item.height_cm;
        case 1: return item.weight_kg;
        case 2: return item.test_score;
        default: throw ConfigError("attribute index must be 0, 1, or 2");
    }
}

struct GameState {
    std::vector<Item> items;
    std::vector<int> remaining;  // indices into items
    int answer = 0;
    int questions_asked = 0;

    void validate() const {
        if (items.size() != kGameItems) throw DataError("GameState: need exactly 40 items");
        std::vector<int> per_owner(kGameMembers, 0);
        for (const Item& it : items) {
            if (it.owner < 0 || it.owner >= kGameMembers)
                throw DataError("GameState: owner out of range");
            ++per_owner[it.owner];
        }
        for (int c : per_owner)
            if (c != kGameItems / kGameMembers)
                throw DataError("GameState: owners must hold 10 items each");
        if (answer < 0 || answer >= kGameItems) throw DataError("GameState: bad answer index");
        if (std::find(remaining.begin(), remaining.end(), answer) == remaining.end())
            throw DataError("GameState: the answer must remain possible");
    }
};

inline GameState new_game(std::uint64_t seed) {
    Rng rng(seed);
    GameState g;
    g.items.reserve(kGameItems);
    for (int i = 0; i < kGameItems; ++i) {
        Item it;
        it.height_cm = rng.uniform(150.0, 200.0);
        it.weight_kg = rng.uniform(45.0, 110.0);
        it.test_score = rng.uniform(0.0, 100.0);
        it.owner = i / (kGameItems / kGameMembers);
        g.items.push_back(it);
    }
    g.answer = rng.uniform_int(kGameItems);
    g.remaining.resize(kGameItems);
    for (int i = 0; i < kGameItems; ++i) g.remaining[i] = i;
    return g;
}

// "Is the attribute <= threshold?"  yes_count is evaluated over the
// remaining set the question was built from.
struct Question {
    int attribute = 0;
    double threshold = 0.0;
    int yes_count = 0;
    bool degenerate = false;  // no nontrivial split existed

    bool predicate(const Item& item) const {
        return attribute_value(item, attribute) <= threshold;
    }
};

namespace detail {

// Best attribute-threshold split whose yes-share is closest to the
// target fraction; ties prefer the lowest attribute, then threshold.
inline Question pick_question(const GameState& state, double target_fraction) {
    const auto n = static_cast<int>(state.remaining.size());
    if (n < 2) throw DataError("pick_question: fewer than 2 items remain");
    const double want = target_fraction * n;

    Question best;
    double best_err = std::numeric_limits<double>::infinity();
    for (int attr = 0; attr < 3; ++attr) {
        std::vector<double> values;
        values.reserve(state.remaining.size());
        for (int idx : state.remaining)
            values.push_back(attribute_value(state.items[idx], attr));
        std::sort(values.begin(), values.end());
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i + 1 < values.size() && values[i + 1] == values[i]) continue;
            const int yes = static_cast<int>(i) + 1;  // count of items <= values[i]
            const double err = std::fabs(yes - want);
            const bool better =
                err < best_err ||
                (err == best_err && (attr < best.attribute ||
                                     (attr == best.attribute && values[i] < best.threshold)));
            if (better) {
                best_err = err;
                best.attribute = attr;
                best.threshold = values[i];
                best.yes_count = yes;
            }
        }
    }
    best.degenerate = best.yes_count == 0 || best.yes_count == n;
    return best;
}

} // namespace detail

inline Question optimal_halving_question(const GameState& state) {
    return detail::pick_question(state, 0.5);
}

// Truthful answer for the hidden item.
inline bool question_answer(const GameState& state, const Question& q) {
    return q.predicate(state.items[state.answer]);
}

// Filter the remaining set to the side consistent with the answer.
inline void apply_question(GameState& state, const Question& q, bool yes) {
    std::vector<int> kept;
    for (int idx : state.remaining)
        if (q.predicate(state.items[idx]) == yes) kept.push_back(idx);
    if (kept.empty()) throw DataError("apply_question: answer inconsistent with remaining set");
    state.remaining = std::move(kept);
    ++state.questions_asked;
}

struct QuestionRecord {
    Question question;
    bool answer_yes = false;
    int remaining_before = 0;
    int remaining_after = 0;
    bool bad = false;  // left >= 30% more items than the optimal split would
};

struct GameLog {
    std::vector<QuestionRecord> questions;
    bool solved = false;
    bool aborted = false;  // hit the question limit
    int question_count = 0;
};

// Play to completion.  Quality 1 asks exact half-splits; lower quality
// pulls the target share away from one half by a uniform random bias of
// width (1 - q).  Answers are always truthful, so the hidden item is
// never eliminated and the game ends when it alone remains (or at the
// question limit, flagged).
inline GameLog play_game(GameState state, double quality, std::uint64_t seed) {
    if (!(quality >= 0.0 && quality <= 1.0))
        throw ConfigError("play_game: quality must lie in [0, 1]");
    state.validate();
    Rng rng(seed);
    GameLog log;
    while (state.remaining.size() > 1 && state.questions_asked < kQuestionLimit) {
        const double target = 0.5 + (1.0 - quality) * rng.uniform(-0.5, 0.5);
        const Question q = detail::pick_question(state, target);

        // What the half-split would have left, for the bad-question flag.
        const Question opt = optimal_halving_question(state);
        int optimal_after = 0;
        const bool opt_yes = question_answer(state, opt);
        for (int idx : state.remaining)
            if (opt.predicate(state.items[idx]) == opt_yes) ++optimal_after;

        QuestionRecord rec;
        rec.question = q;
        rec.remaining_before = static_cast<int>(state.remaining.size());
        rec.answer_yes = question_answer(state, q);
        apply_question(state, q, rec.answer_yes);
        rec.remaining_after = static_cast<int>(state.remaining.size());
        rec.bad = 10 * rec.remaining_after >= 13 * optimal_after;
        log.questions.push_back(rec);
    }
    log.solved = state.remaining.size() == 1;
    log.aborted = !log.solved;
    log.question_count = state.questions_asked;
    return log;
}

// Synthetic link from the hazard pipeline: an expected eliminated
// fraction of one half (a perfect halving question) maps to quality 1,
// linearly down to zero.
inline double quality_from_eliminated_fraction(double fraction) {
    if (!(fraction >= 0.0 && fraction <= 1.0))
        throw ConfigError("quality_from_eliminated_fraction: fraction must lie in [0, 1]");
    return std::min(1.0, 2.0 * fraction);
}

} // namespace turnmjp
