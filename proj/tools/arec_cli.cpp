// arec: command-line front end over the library modules.

#include "arec/api.hpp"
#include "arec/apweb.hpp"
#include "arec/corpus.hpp"
#include "arec/engine.hpp"
#include "arec/errors.hpp"
#include "arec/proximity.hpp"
#include "arec/server.hpp"
#include "arec/simharness.hpp"
#include "arec/spreading.hpp"
#include "arec/text.hpp"

#include "CLI11.hpp"

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <pthread.h>

namespace {

using namespace arec;
namespace fs = std::filesystem;

// "-" is standard output.
class Output {
public:
    explicit Output(const std::string& path) {
        if (path != "-") {
            file_.open(path, std::ios::binary);
            if (!file_) throw std::runtime_error("cannot write " + path);
        }
    }
    std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

private:
    std::ofstream file_;
};

std::string number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_index(const std::string& path, const Interner& names) {
    Output out(path);
    for (Index i = 0; i < names.size(); ++i) out.stream() << i << '\t' << names.name(i) << '\n';
}

// Reads `index<TAB>name` lines as written by write_index().
Interner read_index(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw NotFound("cannot open index file " + path);
    std::vector<std::string> names;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto fields = text::split(line, '\t');
        std::size_t i = 0;
        if (fields.size() != 2 || !text::parse_int(fields[0], i) || i != names.size())
            throw ParseError(lineno, "expected '" + std::to_string(names.size()) + "<TAB>name'");
        names.emplace_back(fields[1]);
    }
    Interner out;
    for (const auto& n : names) out.intern(n);
    return out;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    for (auto part : text::split(s, ','))
        if (!part.empty()) out.emplace_back(part);
    return out;
}

// id=path, or just path with the id taken from the file stem.
std::pair<std::string, fs::path> context_arg(const std::string& arg) {
    const auto eq = arg.find('=');
    if (eq == std::string::npos) return {fs::path(arg).stem().string(), arg};
    return {arg.substr(0, eq), arg.substr(eq + 1)};
}

EngineConfig load_config(const std::string& path) {
    if (path.empty()) return {};
    std::ifstream in(path);
    if (!in) throw NotFound("cannot open config file " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(0, path + ": " + e.what());
    }
    return engine_config_from_json(j);
}

struct IngestArgs {
    std::string file;
    std::size_t min_freq = 2;
    bool stem = false;
};

void add_ingest_options(CLI::App* cmd, IngestArgs& a) {
    cmd->add_option("records", a.file, "record file (#krc 1)")->required();
    cmd->add_option("--min-freq", a.min_freq, "drop keywords qualifying fewer records")->capture_default_str();
    cmd->add_flag("--stem", a.stem, "apply suffix stemming to keywords");
}

int run_ingest(const IngestArgs& a, bool frequencies, const std::string& normalized) {
    const auto ctx = ingest(fs::path(a.file), {a.min_freq, a.stem});
    std::size_t assignments = 0;
    for (Index k = 0; k < ctx.keyword_count(); ++k) assignments += ctx.incidence().row_size(k);
    std::cout << "records\t" << ctx.record_count() << '\n'
              << "keywords\t" << ctx.keyword_count() << '\n'
              << "documents\t" << ctx.document_count() << '\n'
              << "cited\t" << ctx.cited_count() << '\n'
              << "citing_records\t" << ctx.citing_records().size() << '\n'
              << "citations\t" << ctx.citation().nonzeros() << '\n'
              << "keyword_assignments\t" << assignments << '\n';
    if (frequencies) {
        std::vector<std::pair<std::size_t, std::string>> rows;
        for (Index k = 0; k < ctx.keyword_count(); ++k)
            rows.emplace_back(ctx.incidence().row_size(k), ctx.keywords().name(k));
        std::sort(rows.begin(), rows.end(), [](const auto& x, const auto& y) {
            return x.first != y.first ? x.first > y.first : x.second < y.second;
        });
        for (const auto& [n, k] : rows) std::cout << "frequency\t" << k << '\t' << n << '\n';
    }
    if (!normalized.empty()) {
        Output out(normalized);
        const auto records = ctx.to_records();
        write_record_file(out.stream(), records);
    }
    return 0;
}

struct ProxArgs {
    IngestArgs ingest;
    std::string kind = "keyword_semantic";
    double lambda = 0.5;
    std::string out = "-";
    std::string index;
    bool diagonal = false;
    std::string neighbors;
    double alpha = 0.0;
    bool hits = false;
    std::string semi_metric;
};

int run_prox(const ProxArgs& a) {
    const auto ctx = ingest(fs::path(a.ingest.file), {a.ingest.min_freq, a.ingest.stem});
    const auto kind = proximity_kind_from_string(a.kind);
    SparseProximity p;
    const Interner* names = nullptr;
    switch (kind) {
        case ProximityKind::inwards: p = inwards_proximity(ctx); names = &ctx.documents(); break;
        case ProximityKind::outwards: p = outwards_proximity(ctx); names = &ctx.documents(); break;
        case ProximityKind::structural:
            p = combine_structural(inwards_proximity(ctx), outwards_proximity(ctx), a.lambda);
            names = &ctx.documents();
            break;
        case ProximityKind::keyword_semantic: p = keyword_semantic_proximity(ctx); names = &ctx.keywords(); break;
        case ProximityKind::record_semantic: p = record_semantic_proximity(ctx); names = &ctx.records(); break;
        default: throw std::invalid_argument("prox: kind '" + a.kind + "' is not derived from a record file");
    }
    if (!a.index.empty()) write_index(a.index, *names);

    if (!a.neighbors.empty()) {
        for (const auto& n : neighborhood(p, names->at(a.neighbors), a.alpha).members)
            std::cout << names->name(n.node) << '\t' << number(n.proximity) << '\n';
        return 0;
    }
    if (!a.semi_metric.empty()) {
        const auto pair = split_list(a.semi_metric);
        if (pair.size() != 2) throw std::invalid_argument("--semi-metric expects two comma-separated nodes");
        const auto ratio = semi_metric_ratio(p, names->at(pair[0]), names->at(pair[1]));
        std::cout << pair[0] << '\t' << pair[1] << '\t' << (ratio ? number(*ratio) : "none") << '\n';
        return 0;
    }
    if (a.hits) {
        const auto r = hits_rank(ctx);
        std::cout << "document\tauthority\thub\n";
        for (Index d = 0; d < ctx.document_count(); ++d)
            std::cout << ctx.documents().name(d) << '\t' << number(r.authority[d]) << '\t' << number(r.hub[d]) << '\n';
        return 0;
    }
    Output out(a.out);
    write_proximity(out.stream(), p, a.diagonal);
    return 0;
}

struct SaArgs {
    std::string network;
    std::string kind = "composite";
    std::string cues;
    std::string index;
    std::size_t top = 10;
    double decay = 0.8;
    std::size_t max_iterations = 500;
    double tolerance = 1e-8;
    bool keep_cues = false;
};

int run_sa(const SaArgs& a) {
    std::ifstream in(a.network);
    if (!in) throw NotFound("cannot open network " + a.network);
    std::optional<Interner> names;
    if (!a.index.empty()) names = read_index(a.index);
    const auto p = read_proximity(in, proximity_kind_from_string(a.kind), names ? names->size() : 0);
    std::vector<Index> cues;
    for (const auto& c : split_list(a.cues)) {
        if (names) {
            cues.push_back(names->at(c));
        } else {
            std::size_t i = 0;
            if (!text::parse_int(c, i)) throw std::invalid_argument("cue '" + c + "' is not an index; pass --index");
            cues.push_back(static_cast<Index>(i));
        }
    }
    SAConfig cfg;
    cfg.decay = a.decay;
    cfg.max_iterations = a.max_iterations;
    cfg.tolerance = a.tolerance;
    cfg.top_k = a.top;
    cfg.exclude_cues = !a.keep_cues;
    const auto r = spread(p, cues, cfg);
    for (const auto& n : r.ranking)
        std::cout << (names ? names->name(n.node) : std::to_string(n.node)) << '\t' << number(n.activation) << '\n';
    std::cerr << "iterations " << r.iterations << (r.converged ? " (converged)" : " (not converged)") << '\n';
    return 0;
}

struct LearnArgs {
    std::string log;
    std::string records;
    std::int64_t gap = kDefaultSessionGap;
    double symm = 0.3;
    double trans = 0.5;
    std::string out = "-";
    std::string index;
    bool symmetrize = false;
    bool list_paths = false;
};

int run_learn(const LearnArgs& a) {
    std::ifstream in(a.log);
    if (!in) throw NotFound("cannot open path log " + a.log);
    const auto log = parse_path_log(in);
    const auto paths = extract_paths(log, a.gap);
    if (a.list_paths) {
        for (const auto& p : paths) std::cout << p.first << '\t' << p.second << '\t' << p.third << '\n';
        return 0;
    }
    Interner documents;
    if (!a.records.empty()) {
        documents = ingest(fs::path(a.records), {1, false}).documents();
    } else {
        std::vector<std::string> names;
        for (const auto& c : log) names.push_back(c.document);
        documents = Interner::sorted(std::move(names));
    }
    if (!a.index.empty()) write_index(a.index, documents);
    auto t = learn(paths, documents, {a.symm, a.trans});
    if (a.symmetrize) t = symmetrize_max(t);
    Output out(a.out);
    write_proximity(out.stream(), t);
    std::cerr << "paths " << paths.size() << '\n';
    return 0;
}

std::unique_ptr<Engine> local_engine(const std::string& config, const std::vector<std::string>& contexts) {
    auto engine = std::make_unique<Engine>(load_config(config));
    for (const auto& c : contexts) {
        const auto [id, path] = context_arg(c);
        engine->add_context(id, path, engine->config().ingest);
    }
    return engine;
}

struct SimArgs {
    std::string spec;
    std::string out = "-";
    std::string url;
    std::string config;
    std::vector<std::string> contexts;
    std::string snapshot_out;
};

int run_simulate(const SimArgs& a) {
    const auto spec = read_community_spec(a.spec);
    SimReport report;
    if (!a.url.empty()) {
        if (!a.contexts.empty()) throw std::invalid_argument("--url and --context are exclusive");
        HttpTransport http(a.url);
        report = run_community_sim(spec, http);
    } else {
        auto engine = local_engine(a.config, a.contexts);
        Api api(*engine);
        InProcessTransport local(api);
        report = run_community_sim(spec, local);
        if (!a.snapshot_out.empty()) engine->save(a.snapshot_out);
    }
    Output out(a.out);
    write_report(out.stream(), report);
    return 0;
}

struct ServeArgs {
    std::string config;
    std::vector<std::string> contexts;
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string state_dir;
    std::string restore;
    std::string journal;
    std::string ui_dir;
    bool no_timer = false;
};

int run_serve(const ServeArgs& a) {
    // Block the stop signals before any thread starts so only sigwait sees them.
    sigset_t stop_signals;
    sigemptyset(&stop_signals);
    sigaddset(&stop_signals, SIGINT);
    sigaddset(&stop_signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);

    std::unique_ptr<Engine> engine;
    if (!a.restore.empty()) {
        if (!a.config.empty()) throw std::invalid_argument("--restore brings its own configuration; drop --config");
        engine = Engine::restore(a.restore);
    } else {
        engine = std::make_unique<Engine>(load_config(a.config));
    }
    std::ofstream journal;
    if (!a.journal.empty()) {
        journal.open(a.journal, std::ios::app);
        if (!journal) throw std::runtime_error("cannot open journal " + a.journal);
        engine->set_journal(&journal);
    }
    for (const auto& c : a.contexts) {
        const auto [id, path] = context_arg(c);
        engine->add_context(id, path, engine->config().ingest);
    }

    if (engine->list_contexts().empty()) throw std::invalid_argument("serve needs at least one context");

    ServerOptions options;
    options.on_cycle = [](const CycleReport& r) {
        std::cout << "cycle version " << r.version << ": " << r.categories << " categories, log " << r.log_length;
        for (const auto& [ctx, added] : r.propagated)
            if (!added.empty()) std::cout << ", " << added.size() << " keywords propagated into " << ctx;
        std::cout << std::endl;
    };
    options.host = a.host;
    options.port = a.port;
    if (!a.ui_dir.empty()) options.ui_dir = a.ui_dir;
    options.adaptation_timer = !a.no_timer;
    HttpServer server(*engine, options);
    server.start();
    std::cout << "listening on http://" << a.host << ':' << server.port() << std::endl;

    int sig = 0;
    sigwait(&stop_signals, &sig);
    std::cout << "stopping on signal " << sig << std::endl;
    server.stop();
    if (!a.state_dir.empty()) {
        engine->save(a.state_dir);
        std::cout << "snapshot written to " << a.state_dir << std::endl;
    }
    return 0;
}

struct ReplayArgs {
    std::string events;
    std::string snapshot_out;
    std::string restore;
};

int run_replay(const ReplayArgs& a) {
    std::ifstream in(a.events);
    if (!in) throw NotFound("cannot open journal " + a.events);
    std::optional<fs::path> restore;
    if (!a.restore.empty()) restore = a.restore;
    auto engine = Engine::replay(in, restore);
    engine->save(a.snapshot_out);
    std::cout << "version\t" << engine->version() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"arec: adaptive recommendation over knowledge contexts"};
    app.require_subcommand(1);

    IngestArgs ingest_args;
    bool frequencies = false;
    std::string normalized;
    auto* ingest_cmd = app.add_subcommand("ingest", "parse a record file and print its statistics");
    add_ingest_options(ingest_cmd, ingest_args);
    ingest_cmd->add_flag("--frequencies", frequencies, "list keyword frequencies");
    ingest_cmd->add_option("--normalized", normalized, "write the filtered records to this file");

    ProxArgs prox;
    auto* prox_cmd = app.add_subcommand("prox", "compute a proximity network from a record file");
    add_ingest_options(prox_cmd, prox.ingest);
    prox_cmd->add_option("--kind", prox.kind, "inwards, outwards, structural, keyword_semantic or record_semantic")
        ->capture_default_str();
    prox_cmd->add_option("--lambda", prox.lambda, "inwards weight for structural")->capture_default_str();
    prox_cmd->add_option("--out", prox.out, "output file")->capture_default_str();
    prox_cmd->add_option("--index", prox.index, "write index<TAB>name lines to this file");
    prox_cmd->add_flag("--diagonal", prox.diagonal, "include diagonal entries");
    prox_cmd->add_option("--neighbors", prox.neighbors, "print the alpha-neighborhood of this node instead");
    prox_cmd->add_option("--alpha", prox.alpha, "neighborhood threshold")->capture_default_str();
    prox_cmd->add_flag("--hits", prox.hits, "print authority and hub scores of the documents instead");
    prox_cmd->add_option("--semi-metric", prox.semi_metric, "print the semi-metric ratio of a,b instead");

    SaArgs sa;
    auto* sa_cmd = app.add_subcommand("sa", "spreading activation over a proximity file");
    sa_cmd->add_option("--network", sa.network, "proximity file (#prox 1)")->required();
    sa_cmd->add_option("--kind", sa.kind, "network kind; traversal is directed")->capture_default_str();
    sa_cmd->add_option("--cues", sa.cues, "comma-separated cue nodes")->required();
    sa_cmd->add_option("--index", sa.index, "index file naming the nodes");
    sa_cmd->add_option("--top", sa.top, "number of results")->capture_default_str();
    sa_cmd->add_option("--decay", sa.decay, "decay per step")->capture_default_str();
    sa_cmd->add_option("--max-iterations", sa.max_iterations)->capture_default_str();
    sa_cmd->add_option("--tolerance", sa.tolerance)->capture_default_str();
    sa_cmd->add_flag("--keep-cues", sa.keep_cues, "rank the cues too");

    LearnArgs learn_args;
    auto* learn_cmd = app.add_subcommand("learn-paths", "learn traversal proximity from a path log");
    learn_cmd->add_option("--log", learn_args.log, "path log (#plog 1)")->required();
    learn_cmd->add_option("--records", learn_args.records, "record file fixing the document index");
    learn_cmd->add_option("--gap", learn_args.gap, "session gap in seconds")->capture_default_str();
    learn_cmd->add_option("--symm", learn_args.symm, "symmetry factor")->capture_default_str();
    learn_cmd->add_option("--trans", learn_args.trans, "transitivity factor")->capture_default_str();
    learn_cmd->add_option("--out", learn_args.out, "output file")->capture_default_str();
    learn_cmd->add_option("--index", learn_args.index, "write index<TAB>document lines to this file");
    learn_cmd->add_flag("--symmetrize", learn_args.symmetrize, "write max(t(i,j), t(j,i))");
    learn_cmd->add_flag("--paths", learn_args.list_paths, "print the extracted paths instead");

    SimArgs sim;
    auto* sim_cmd = app.add_subcommand("simulate", "drive a synthetic user community through the engine");
    sim_cmd->add_option("--spec", sim.spec, "community spec (JSON)")->required();
    sim_cmd->add_option("--out", sim.out, "report file")->capture_default_str();
    sim_cmd->add_option("--url", sim.url, "running engine, e.g. http://127.0.0.1:8080");
    sim_cmd->add_option("--config", sim.config, "engine configuration (JSON) for a local engine");
    sim_cmd->add_option("--context", sim.contexts, "id=record_file for a local engine")->take_all();
    sim_cmd->add_option("--snapshot-out", sim.snapshot_out, "save the local engine afterwards");

    ServeArgs serve;
    auto* serve_cmd = app.add_subcommand("serve", "run the HTTP service");
    serve_cmd->add_option("--config", serve.config, "engine configuration (JSON)");
    serve_cmd->add_option("--context", serve.contexts, "id=record_file")->take_all();
    serve_cmd->add_option("--host", serve.host)->capture_default_str();
    serve_cmd->add_option("--port", serve.port, "0 picks a free port")->capture_default_str();
    serve_cmd->add_option("--state-dir", serve.state_dir, "snapshot written here on SIGINT/SIGTERM");
    serve_cmd->add_option("--restore", serve.restore, "start from this snapshot");
    serve_cmd->add_option("--journal", serve.journal, "append state changes to this file");
    serve_cmd->add_option("--ui-dir", serve.ui_dir, "static files served under /ui");
    serve_cmd->add_flag("--no-timer", serve.no_timer, "adapt only on POST /admin/adapt-now");

    ReplayArgs replay;
    auto* replay_cmd = app.add_subcommand("replay", "rebuild engine state from a journal");
    replay_cmd->add_option("--events", replay.events, "journal file")->required();
    replay_cmd->add_option("--snapshot-out", replay.snapshot_out, "snapshot directory to write")->required();
    replay_cmd->add_option("--restore", replay.restore, "snapshot the journal continues from");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ingest_cmd) return run_ingest(ingest_args, frequencies, normalized);
        if (*prox_cmd) return run_prox(prox);
        if (*sa_cmd) return run_sa(sa);
        if (*learn_cmd) return run_learn(learn_args);
        if (*sim_cmd) return run_simulate(sim);
        if (*serve_cmd) return run_serve(serve);
        if (*replay_cmd) return run_replay(replay);
    } catch (const std::exception& e) {
        std::cerr << "arec: error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
