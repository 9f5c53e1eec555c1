#include "arec/talkmine.hpp"

#include "arec/errors.hpp"
#include "arec/text.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>

namespace arec {

namespace {

bool in_open_unit(double v) { return v > 0.0 && v < 1.0; }

std::string join(std::span<const std::string> items, std::string_view sep) {
    std::string out;
    for (const auto& s : items) {
        if (!out.empty()) out += sep;
        out += s;
    }
    return out;
}

// Category keywords known to the context, as (index, membership).
std::vector<std::pair<Index, double>> members_in(const KnowledgeContext& ctx, const FuzzyCategory& category) {
    std::vector<std::pair<Index, double>> out;
    for (const auto& e : category.entries)
        if (auto k = ctx.keywords().find(e.keyword)) out.emplace_back(*k, e.membership);
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

void TalkMineConfig::validate() const {
    if (!in_open_unit(lambda_plus)) throw std::invalid_argument("lambda_plus must be in (0,1)");
    if (!in_open_unit(lambda_minus)) throw std::invalid_argument("lambda_minus must be in (0,1)");
    if (!(dispute_threshold >= 0.0 && dispute_threshold <= 1.0))
        throw std::invalid_argument("dispute_threshold must be in [0,1]");
    if (!(entropy_floor >= 0.0 && entropy_floor <= 1.0)) throw std::invalid_argument("entropy_floor must be in [0,1]");
    if (!(auto_answer_threshold >= 0.0 && auto_answer_threshold <= 1.0))
        throw std::invalid_argument("auto_answer_threshold must be in [0,1]");
    if (!(membership_floor >= 0.0 && membership_floor < 1.0))
        throw std::invalid_argument("membership_floor must be in [0,1)");
}

std::string_view to_string(AnsweredBy by) { return by == AnsweredBy::user ? "user" : "history"; }

std::optional<std::size_t> ConversationState::find(std::string_view keyword) const {
    auto it = std::lower_bound(keywords.begin(), keywords.end(), keyword);
    if (it == keywords.end() || *it != keyword) return std::nullopt;
    return static_cast<std::size_t>(it - keywords.begin());
}

double ConversationState::spread(std::size_t i) const {
    double lo = 1.0, hi = 0.0;
    for (const auto& f : membership) {
        lo = std::min(lo, f[i]);
        hi = std::max(hi, f[i]);
    }
    return membership.empty() ? 0.0 : hi - lo;
}

ConversationState init_category(std::span<const std::string> profile, std::span<const ContextRef> contexts) {
    if (profile.empty()) throw std::invalid_argument("empty interest profile");
    if (contexts.empty()) throw std::invalid_argument("no knowledge contexts");

    ConversationState st;
    st.profile.assign(profile.begin(), profile.end());
    std::sort(st.profile.begin(), st.profile.end());
    st.profile.erase(std::unique(st.profile.begin(), st.profile.end()), st.profile.end());

    std::vector<const ContextRef*> used;
    for (const auto& c : contexts) {
        if (!c.context) throw std::invalid_argument("context " + c.id + " is null");
        if (c.history && c.context->keyword_count() == 0) continue;
        used.push_back(&c);
    }

    std::vector<std::string> unknown;
    for (const auto& k : st.profile) {
        const bool known = std::any_of(used.begin(), used.end(),
                                       [&](const ContextRef* c) { return c->context->keywords().contains(k); });
        if (!known) unknown.push_back(k);
    }
    if (!unknown.empty())
        throw NotFound("profile keywords unknown to every context: " + join(unknown, ", "));

    std::vector<std::map<std::string, double>> per_context(used.size());
    std::map<std::string, char> universe;
    for (std::size_t c = 0; c < used.size(); ++c) {
        const KnowledgeContext& ctx = *used[c]->context;
        auto& f = per_context[c];
        for (const auto& k : st.profile) {
            const auto ki = ctx.keywords().find(k);
            if (!ki) continue;
            for (const auto& e : ctx.working_keyword_proximity().row(*ki)) {
                auto& v = f[ctx.keywords().name(e.col)];
                v = std::max(v, e.value);
            }
            f[k] = 1.0;
        }
        for (const auto& [k, v] : f)
            if (v > 0.0) universe.emplace(k, 0);
    }

    for (const auto& [k, unused] : universe) st.keywords.push_back(k);
    for (std::size_t c = 0; c < used.size(); ++c) {
        st.context_ids.push_back(used[c]->id);
        st.history.push_back(used[c]->history ? 1 : 0);
        std::vector<double> row(st.keywords.size(), 0.0);
        for (std::size_t i = 0; i < st.keywords.size(); ++i) {
            auto it = per_context[c].find(st.keywords[i]);
            if (it != per_context[c].end()) row[i] = it->second;
        }
        st.membership.push_back(std::move(row));
    }
    st.blend.assign(st.keywords.size(), 0.0);
    st.resolved.assign(st.keywords.size(), 0);
    for (std::size_t i = 0; i < st.keywords.size(); ++i)
        for (const auto& f : st.membership) st.blend[i] = std::max(st.blend[i], f[i]);
    for (const auto& k : st.profile) st.resolved[*st.find(k)] = 1;
    return st;
}

double fuzzy_entropy(std::span<const double> memberships) {
    if (memberships.empty()) return 0.0;
    auto xlogx = [](double x) { return x > 0.0 ? x * std::log(x) : 0.0; };
    double sum = 0.0;
    for (double mu : memberships) sum += xlogx(mu) + xlogx(1.0 - mu);
    return -sum / (static_cast<double>(memberships.size()) * std::log(2.0));
}

std::optional<Question> next_question(const ConversationState& state, const TalkMineConfig& config) {
    if (state.questions_asked >= config.question_budget) return std::nullopt;
    if (fuzzy_entropy(state.blend) < config.entropy_floor) return std::nullopt;

    std::optional<std::size_t> best;
    double best_spread = config.dispute_threshold;
    for (std::size_t i = 0; i < state.keywords.size(); ++i) {
        if (state.resolved[i]) continue;
        const double s = state.spread(i);
        if (s > best_spread) {
            best = i;
            best_spread = s;
        }
    }
    if (!best) return std::nullopt;

    Question q{state.keywords[*best], {}};
    for (std::size_t c = 0; c < state.context_ids.size(); ++c)
        q.memberships.emplace_back(state.context_ids[c], state.membership[c][*best]);
    return q;
}

void apply_answer(ConversationState& state, const Answer& answer) {
    const auto i = state.find(answer.keyword);
    if (!i) throw NotFound("keyword " + answer.keyword + " is not part of the conversation");
    if (state.resolved[*i]) throw StateError("keyword " + answer.keyword + " is already resolved");
    double v = answer.relevant ? 0.0 : 1.0;
    for (const auto& f : state.membership) v = answer.relevant ? std::max(v, f[*i]) : std::min(v, f[*i]);
    state.blend[*i] = v;
    state.resolved[*i] = 1;
    ++state.questions_asked;
    state.answers.push_back(answer);
}

std::optional<Answer> try_auto_answer(const ConversationState& state, std::string_view keyword, double level,
                                      const TalkMineConfig& config) {
    if (!(level >= 0.0 && level <= 1.0)) throw std::invalid_argument("auto-answer level must be in [0,1]");
    if (level == 0.0) return std::nullopt;
    const auto i = state.find(keyword);
    if (!i) throw NotFound("keyword " + std::string(keyword) + " is not part of the conversation");
    for (std::size_t c = 0; c < state.context_ids.size(); ++c) {
        if (!state.history[c]) continue;
        const double f = state.membership[c][*i];
        if (std::abs(2.0 * f - 1.0) < 1.0 - level) return std::nullopt;
        return Answer{std::string(keyword), f >= config.auto_answer_threshold, AnsweredBy::history};
    }
    return std::nullopt;
}

double FuzzyCategory::membership(std::string_view keyword) const {
    auto it = std::lower_bound(entries.begin(), entries.end(), keyword,
                               [](const CategoryEntry& e, std::string_view k) { return e.keyword < k; });
    return it != entries.end() && it->keyword == keyword ? it->membership : 0.0;
}

FuzzyCategory finalize(const ConversationState& state, const TalkMineConfig& config) {
    if (next_question(state, config)) throw StateError("conversation still has open questions");
    FuzzyCategory cat;
    const double peak = state.blend.empty() ? 0.0 : *std::max_element(state.blend.begin(), state.blend.end());
    if (peak <= 0.0) return cat;
    for (std::size_t i = 0; i < state.keywords.size(); ++i) {
        const double mu = state.blend[i] == peak ? 1.0 : state.blend[i] / peak;
        if (mu < config.membership_floor || mu <= 0.0) continue;
        CategoryEntry e{state.keywords[i], mu, {}};
        for (std::size_t c = 0; c < state.context_ids.size(); ++c)
            if (state.membership[c][i] > 0.0) e.contexts.push_back(state.context_ids[c]);
        cat.entries.push_back(std::move(e));
    }
    return cat;
}

void write_category(std::ostream& out, const FuzzyCategory& category) {
    out << kCategoryHeader << '\n';
    for (const auto& e : category.entries)
        out << e.keyword << '\t' << text::format_double(e.membership) << '\t' << join(e.contexts, ",") << '\n';
}

FuzzyCategory parse_category(std::istream& in) {
    FuzzyCategory cat;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        text::strip_cr(line);
        if (!header_seen) {
            if (line != kCategoryHeader) throw ParseError(line_no, "expected header '" + std::string(kCategoryHeader) + "'");
            header_seen = true;
            continue;
        }
        if (line.empty()) continue;
        const auto f = text::split(line, '\t');
        CategoryEntry e;
        if (f.size() != 3 || !is_valid_identifier(f[0]) || !text::parse_double(f[1], e.membership) ||
            !(e.membership > 0.0 && e.membership <= 1.0))
            throw ParseError(line_no, "expected 'keyword<TAB>membership<TAB>context_ids'");
        e.keyword = std::string(f[0]);
        if (!f[2].empty())
            for (auto c : text::split(f[2], ',')) {
                if (!is_valid_identifier(c)) throw ParseError(line_no, "invalid context id");
                e.contexts.emplace_back(c);
            }
        if (!cat.entries.empty() && cat.entries.back().keyword >= e.keyword)
            throw ParseError(line_no, "keywords must be unique and sorted");
        cat.entries.push_back(std::move(e));
    }
    if (!header_seen) throw ParseError(0, "empty category");
    return cat;
}

std::vector<RecordScore> recommend_records(const FuzzyCategory& category, const KnowledgeContext& ctx,
                                           std::size_t top_n) {
    if (category.empty()) throw std::invalid_argument("recommend_records: empty category");
    double total = 0.0;
    for (const auto& e : category.entries) total += e.membership;

    std::map<Index, double> acc;
    for (const auto& [k, mu] : members_in(ctx, category))
        for (Index r : ctx.incidence().row(k)) acc[r] += mu;

    std::vector<RecordScore> out;
    for (const auto& [r, s] : acc)
        if (s > 0.0) out.push_back({ctx.records().name(r), s / total});
    std::sort(out.begin(), out.end(), [](const RecordScore& a, const RecordScore& b) {
        return a.score != b.score ? a.score > b.score : a.record < b.record;
    });
    if (out.size() > top_n) out.resize(top_n);
    return out;
}

void adapt(KnowledgeContext& ctx, const FuzzyCategory& category, double lambda_plus, double lambda_minus) {
    if (!in_open_unit(lambda_plus)) throw std::invalid_argument("lambda_plus must be in (0,1)");
    if (!in_open_unit(lambda_minus)) throw std::invalid_argument("lambda_minus must be in (0,1)");
    const auto members = members_in(ctx, category);
    std::vector<char> inside(ctx.keyword_count(), 0);
    for (const auto& [k, mu] : members) inside[k] = 1;

    SparseProximity& w = ctx.working_keyword_proximity();
    // Decays read the pre-update matrix; the two pair sets are disjoint.
    std::vector<std::pair<Index, Index>> decayed;
    for (const auto& [k, mu] : members)
        for (const auto& e : w.row(k))
            if (!inside[e.col] && e.value > 0.0) decayed.emplace_back(k, e.col);
    for (const auto& [i, j] : decayed) w.set(i, j, (1.0 - lambda_minus) * w.get(i, j));

    for (std::size_t a = 0; a < members.size(); ++a)
        for (std::size_t b = a + 1; b < members.size(); ++b) {
            const auto [i, mi] = members[a];
            const auto [j, mj] = members[b];
            const double v = w.get(i, j);
            w.set(i, j, std::clamp(v + lambda_plus * mi * mj * (1.0 - v), 0.0, 1.0));
        }
}

std::vector<std::string> propagate_keywords(KnowledgeContext& ctx, const FuzzyCategory& category,
                                            double lambda_plus) {
    if (!in_open_unit(lambda_plus)) throw std::invalid_argument("lambda_plus must be in (0,1)");
    std::vector<std::string> added;
    for (const auto& e : category.entries)
        if (!ctx.keywords().contains(e.keyword)) {
            ctx.add_keyword(e.keyword);
            added.push_back(e.keyword);
        }
    if (added.empty()) return added;

    const auto members = members_in(ctx, category);
    SparseProximity& w = ctx.working_keyword_proximity();
    for (const auto& name : added) {
        const Index k = ctx.keywords().at(name);
        const double mu = category.membership(name);
        for (const auto& [j, mj] : members)
            if (j != k) w.set(k, j, std::clamp(lambda_plus * mu * mj, 0.0, 1.0));
    }
    return added;
}

}  // namespace arec
