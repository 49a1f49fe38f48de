#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "czsl/inference.hpp"
#include "czsl/manifest.hpp"
#include "czsl/oracles.hpp"
#include "czsl/synthgen.hpp"
#include "czsl/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace czsl;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitInput = 3;
constexpr int kExitNumeric = 4;

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
    return out;
}

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
    return out;
}

struct LoadedData {
    SceneDataset ds;
    EmbeddingTable emb;
    PairedEmbeddings paired;
};

LoadedData load_data(const std::string& scenes, const std::string& bank,
                     const std::string& embeddings, const std::string& split,
                     int64_t min_count) {
    LoadedData d;
    d.emb = load_embeddings(embeddings);
    std::optional<std::string> bank_opt;
    if (!bank.empty()) bank_opt = bank;
    d.ds = ingest_scenes(scenes, bank_opt, min_count, &d.emb).dataset;
    if (!split.empty()) read_split_file(split, d.ds);
    d.paired = PairedEmbeddings(d.emb, d.ds.vocab);
    return d;
}

RetrievalDomain parse_mode(const std::string& mode) {
    if (mode == "target") return RetrievalDomain::Target;
    if (mode == "source") return RetrievalDomain::Source;
    if (mode == "generalized") return RetrievalDomain::Generalized;
    throw InputError("unknown mode '" + mode + "'");
}

std::vector<int> candidates_for(const ClassVocab& vocab, RetrievalDomain mode) {
    switch (mode) {
        case RetrievalDomain::Target: return vocab.target_classes();
        case RetrievalDomain::Source: return vocab.source_classes();
        case RetrievalDomain::Generalized: {
            std::vector<int> all(vocab.size());
            std::iota(all.begin(), all.end(), 0);
            return all;
        }
    }
    throw InputError("bad mode");
}

// Checkpoint sidecar describing scorer construction.
struct CheckpointMeta {
    std::vector<std::string> components;
    std::string context_model = "sh";
    int d = 0, d_visual = 0, hidden = 0;
    bool devise = false, oracle = false, normalized_dot = true;
    uint64_t seed = 0;

    bool has(const std::string& c) const {
        return std::find(components.begin(), components.end(), c) != components.end();
    }
    void write(const std::string& path) const {
        nlohmann::ordered_json j;
        j["components"] = components;
        j["context_model"] = context_model;
        j["d"] = d;
        j["d_visual"] = d_visual;
        j["hidden"] = hidden;
        j["devise"] = devise;
        j["oracle"] = oracle;
        j["normalized_dot"] = normalized_dot;
        j["seed"] = seed;
        std::ofstream os(path);
        if (!os) throw InputError("cannot open " + path);
        os << j.dump(2) << '\n';
    }
    static CheckpointMeta read(const std::string& path) {
        std::ifstream is(path);
        if (!is) throw InputError("cannot open checkpoint meta " + path);
        json j = json::parse(is);
        CheckpointMeta m;
        m.components = j.at("components").get<std::vector<std::string>>();
        m.context_model = j.at("context_model").get<std::string>();
        m.d = j.at("d").get<int>();
        m.d_visual = j.at("d_visual").get<int>();
        m.hidden = j.at("hidden").get<int>();
        m.devise = j.at("devise").get<bool>();
        m.oracle = j.at("oracle").get<bool>();
        m.normalized_dot = j.at("normalized_dot").get<bool>();
        m.seed = j.at("seed").get<uint64_t>();
        return m;
    }
};

ScorerBundle build_bundle(const CheckpointMeta& meta) {
    ScorerBundle bundle;
    Rng rng(meta.seed);
    if (meta.has("visual")) {
        bundle.visual.emplace(meta.d_visual, meta.d);
        bundle.visual->normalized_dot = meta.normalized_dot;
        bundle.visual->init(rng);
    }
    if (meta.has("context")) {
        bundle.context.emplace(meta.d_visual, meta.d, meta.hidden,
                               parse_ctx_model(meta.context_model), meta.oracle);
        bundle.context->init(rng);
    }
    if (meta.has("prior")) {
        bundle.prior.emplace(meta.d, meta.hidden);
        bundle.prior->init(rng);
    }
    if (meta.has("joint")) {
        bundle.joint.emplace(meta.d_visual, meta.d, meta.hidden);
        bundle.joint->init(rng);
    }
    return bundle;
}

ScorerBundle load_bundle(const std::string& checkpoint, CheckpointMeta& meta) {
    meta = CheckpointMeta::read(checkpoint + ".meta.json");
    ScorerBundle bundle = build_bundle(meta);
    load_checkpoint(checkpoint, bundle.tensors());
    return bundle;
}

CalibrationWeights load_calibration(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw InputError("cannot open calibration " + path);
    json j = json::parse(is);
    return CalibrationWeights::of(j.at("alpha_c").get<double>(), j.at("alpha_v").get<double>(),
                                  j.at("alpha_p").get<double>());
}

int run(int argc, char** argv) {
    CLI::App app{"Context-aware zero-shot learning experiments"};
    app.require_subcommand(1);

    // --- gen-synth ----------------------------------------------------------
    auto* gen = app.add_subcommand("gen-synth", "Generate a synthetic world");
    WorldSpec spec;
    std::string gen_out = "synth";
    std::string pairs_text;
    gen->add_option("--classes", spec.n_classes)->check(CLI::PositiveNumber);
    gen->add_option("--scenes", spec.n_scenes)->check(CLI::PositiveNumber);
    gen->add_option("--seed", spec.seed);
    gen->add_option("--themes", spec.n_themes);
    gen->add_option("--zipf", spec.zipf_exponent);
    gen->add_option("--d", spec.d);
    gen->add_option("--d-visual", spec.d_visual);
    gen->add_option("--concentration", spec.theme_concentration);
    gen->add_option("--visual-noise", spec.visual_noise_sigma);
    gen->add_option("--emb-noise", spec.embedding_noise_sigma);
    gen->add_option("--objects-mean", spec.objects_per_scene_mean);
    gen->add_option("--max-objects", spec.max_objects_per_scene);
    gen->add_option("--pairs", pairs_text, "Ambiguity pairs, e.g. 3:7,10:12");
    gen->add_option("--out", gen_out);

    // --- ingest -------------------------------------------------------------
    auto* ing = app.add_subcommand("ingest", "Ingest and filter a scene file");
    std::string ing_scenes, ing_bank, ing_emb, ing_out = "ingested";
    int64_t ing_min_count = 10;
    ing->add_option("--scenes", ing_scenes)->required();
    ing->add_option("--bank", ing_bank);
    ing->add_option("--embeddings", ing_emb);
    ing->add_option("--min-count", ing_min_count);
    ing->add_option("--out", ing_out);

    // --- split --------------------------------------------------------------
    auto* spl = app.add_subcommand("split", "Build domain and image splits");
    std::string spl_scenes, spl_emb, spl_out = "split.txt", spl_ratios = "0.7,0.1,0.2";
    std::string spl_forced;
    double spl_psup = 0.5;
    uint64_t spl_seed = 1;
    int64_t spl_min_count = 1;
    spl->add_option("--scenes", spl_scenes)->required();
    spl->add_option("--embeddings", spl_emb)->required();
    spl->add_option("--p-sup", spl_psup);
    spl->add_option("--seed", spl_seed);
    spl->add_option("--ratios", spl_ratios);
    spl->add_option("--forced-source", spl_forced, "File with one forced-source label per line");
    spl->add_option("--min-count", spl_min_count);
    spl->add_option("--out", spl_out);

    // --- train --------------------------------------------------------------
    auto* trn = app.add_subcommand("train", "Train selected components");
    std::string trn_scenes, trn_bank, trn_emb, trn_split, trn_out = "run";
    std::string trn_components = "prior,visual,context";
    std::string trn_ctx_model = "sh";
    std::string trn_config;
    bool trn_devise = false, trn_oracle = false, trn_raw_dot = false;
    int trn_hidden = 0;
    int64_t trn_min_count = 1;
    TrainConfig tcfg;
    trn->add_option("--scenes", trn_scenes)->required();
    trn->add_option("--bank", trn_bank);
    trn->add_option("--embeddings", trn_emb)->required();
    trn->add_option("--split", trn_split)->required();
    trn->add_option("--components", trn_components);
    trn->add_option("--context-model", trn_ctx_model);
    trn->add_flag("--devise", trn_devise);
    trn->add_flag("--oracle", trn_oracle);
    trn->add_flag("--raw-dot", trn_raw_dot, "Use unnormalized dot in the visual scorer");
    trn->add_option("--config", trn_config);
    trn->add_option("--hidden", trn_hidden, "Hidden width (default: embedding dim)");
    trn->add_option("--epochs", tcfg.epochs);
    trn->add_option("--batch", tcfg.batch_size);
    trn->add_option("--negatives", tcfg.negatives_per_positive);
    trn->add_option("--gamma-p", tcfg.gamma_p);
    trn->add_option("--gamma-v", tcfg.gamma_v);
    trn->add_option("--gamma-c", tcfg.gamma_c);
    trn->add_option("--lr", tcfg.adam_step);
    trn->add_option("--l2", tcfg.l2_weight);
    trn->add_option("--seed", tcfg.seed);
    trn->add_option("--min-count", trn_min_count);
    trn->add_option("--out", trn_out);

    // --- calibrate ----------------------------------------------------------
    auto* cal = app.add_subcommand("calibrate", "Grid-search combination exponents");
    std::string cal_scenes, cal_bank, cal_emb, cal_split, cal_ckpt, cal_out = "calibration.json";
    std::string cal_mode = "target", cal_grid;
    int64_t cal_min_count = 1;
    cal->add_option("--scenes", cal_scenes)->required();
    cal->add_option("--bank", cal_bank);
    cal->add_option("--embeddings", cal_emb)->required();
    cal->add_option("--split", cal_split)->required();
    cal->add_option("--checkpoint", cal_ckpt)->required();
    cal->add_option("--mode", cal_mode);
    cal->add_option("--grid", cal_grid, "Comma-separated alpha values");
    cal->add_option("--min-count", cal_min_count);
    cal->add_option("--out", cal_out);

    // --- eval ---------------------------------------------------------------
    auto* evl = app.add_subcommand("eval", "Evaluate a trained model");
    std::string evl_scenes, evl_bank, evl_emb, evl_split, evl_ckpt, evl_calib;
    std::string evl_out = "report.json", evl_mode = "target", evl_ks = "1,5,10";
    int64_t evl_min_count = 1;
    evl->add_option("--scenes", evl_scenes)->required();
    evl->add_option("--bank", evl_bank);
    evl->add_option("--embeddings", evl_emb)->required();
    evl->add_option("--split", evl_split)->required();
    evl->add_option("--checkpoint", evl_ckpt)->required();
    evl->add_option("--calibration", evl_calib)->required();
    evl->add_option("--mode", evl_mode);
    evl->add_option("--ks", evl_ks);
    evl->add_option("--min-count", evl_min_count);
    evl->add_option("--out", evl_out);

    // --- oracle-eval --------------------------------------------------------
    auto* oev = app.add_subcommand("oracle-eval", "Evaluate an oracle baseline");
    std::string oev_scenes, oev_bank, oev_emb, oev_split, oev_ckpt, oev_tokens;
    std::string oev_oracle = "true-prior", oev_out = "oracle_report.json";
    std::string oev_mode = "target", oev_ks = "1,5,10";
    double oev_alpha_v = 1.0, oev_alpha_p = 1.0, oev_eps = 1e-9;
    int oev_window = 8;
    int64_t oev_min_count = 1;
    oev->add_option("--oracle", oev_oracle, "true-prior | visual-bayes | textual-bayes");
    oev->add_option("--scenes", oev_scenes)->required();
    oev->add_option("--bank", oev_bank);
    oev->add_option("--embeddings", oev_emb)->required();
    oev->add_option("--split", oev_split)->required();
    oev->add_option("--checkpoint", oev_ckpt, "Trained checkpoint for the visual component");
    oev->add_option("--tokens", oev_tokens, "Token stream for textual-bayes");
    oev->add_option("--window", oev_window);
    oev->add_option("--alpha-v", oev_alpha_v);
    oev->add_option("--alpha-p", oev_alpha_p);
    oev->add_option("--eps", oev_eps);
    oev->add_option("--mode", oev_mode);
    oev->add_option("--ks", oev_ks);
    oev->add_option("--min-count", oev_min_count);
    oev->add_option("--out", oev_out);

    // --- export-scores ------------------------------------------------------
    auto* exp = app.add_subcommand("export-scores", "Export per-component log-scores");
    std::string exp_scenes, exp_bank, exp_emb, exp_split, exp_ckpt, exp_out = "scores.csv";
    std::string exp_mode = "target";
    int exp_negatives = 1;
    uint64_t exp_seed = 1;
    int64_t exp_min_count = 1;
    exp->add_option("--scenes", exp_scenes)->required();
    exp->add_option("--bank", exp_bank);
    exp->add_option("--embeddings", exp_emb)->required();
    exp->add_option("--split", exp_split)->required();
    exp->add_option("--checkpoint", exp_ckpt)->required();
    exp->add_option("--mode", exp_mode);
    exp->add_option("--negatives", exp_negatives);
    exp->add_option("--seed", exp_seed);
    exp->add_option("--min-count", exp_min_count);
    exp->add_option("--out", exp_out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }
    Timer timer;

    if (gen->parsed()) {
        std::vector<std::pair<int, int>> pairs;
        if (!pairs_text.empty()) {
            std::stringstream ss(pairs_text);
            std::string item;
            while (std::getline(ss, item, ',')) {
                const auto colon = item.find(':');
                if (colon == std::string::npos) throw InputError("bad pair '" + item + "'");
                pairs.emplace_back(std::stoi(item.substr(0, colon)),
                                   std::stoi(item.substr(colon + 1)));
            }
        }
        SynthWorld world = pairs.empty() ? generate(spec) : planted_context_world(spec, pairs);
        fs::create_directories(gen_out);
        const std::string scenes_path = gen_out + "/scenes.jsonl";
        const std::string emb_path = gen_out + "/embeddings.txt";
        const std::string truth_path = gen_out + "/world_truth.json";
        write_scene_file(scenes_path, world.dataset);
        save_embeddings(emb_path, world.embeddings);
        write_world_truth(truth_path, world.truth);

        size_t n_objects = 0;
        for (const auto& s : world.dataset.scenes) n_objects += s.objects.size();
        std::cout << "world: " << spec.n_classes << " classes, " << world.dataset.scenes.size()
                  << " scenes, " << n_objects << " objects, " << spec.n_themes << " themes, "
                  << pairs.size() << " ambiguity pairs\n";

        RunManifest man;
        man.command = "gen-synth";
        man.seed = spec.seed;
        man.config = {{"classes", std::to_string(spec.n_classes)},
                      {"scenes", std::to_string(spec.n_scenes)},
                      {"themes", std::to_string(spec.n_themes)},
                      {"zipf", std::to_string(spec.zipf_exponent)},
                      {"pairs", pairs_text}};
        man.outputs = {scenes_path, emb_path, truth_path};
        man.wall_seconds = timer.seconds();
        man.write(gen_out + "/manifest.json");
        return 0;
    }

    if (ing->parsed()) {
        EmbeddingTable emb;
        if (!ing_emb.empty()) emb = load_embeddings(ing_emb);
        std::optional<std::string> bank_opt;
        if (!ing_bank.empty()) bank_opt = ing_bank;
        IngestResult res = ingest_scenes(ing_scenes, bank_opt, ing_min_count,
                                         ing_emb.empty() ? nullptr : &emb);
        fs::create_directories(ing_out);
        const std::string scenes_path = ing_out + "/scenes.jsonl";
        const std::string bank_path = ing_out + "/features.czfb";
        write_feature_bank(bank_path, res.dataset);
        write_scene_file(scenes_path, res.dataset, /*feature_refs=*/true);
        std::cout << "ingested " << res.dataset.scenes.size() << " scenes, "
                  << res.dataset.vocab.size() << " classes; dropped " << res.dropped_classes
                  << " classes, " << res.dropped_instances << " instances, "
                  << res.dropped_scenes << " scenes\n";
        RunManifest man;
        man.command = "ingest";
        man.config = {{"min_count", std::to_string(ing_min_count)}};
        man.add_input(ing_scenes);
        if (!ing_emb.empty()) man.add_input(ing_emb);
        man.outputs = {scenes_path, bank_path};
        man.wall_seconds = timer.seconds();
        man.write(ing_out + "/manifest.json");
        return 0;
    }

    if (spl->parsed()) {
        LoadedData data = load_data(spl_scenes, "", spl_emb, "", spl_min_count);
        const auto ratios_v = parse_double_list(spl_ratios);
        if (ratios_v.size() != 3) throw InputError("--ratios needs three values");
        std::vector<std::string> forced;
        if (!spl_forced.empty()) {
            std::ifstream is(spl_forced);
            if (!is) throw InputError("cannot open " + spl_forced);
            std::string line;
            while (std::getline(is, line))
                if (!line.empty()) forced.push_back(line);
        }
        split_domains(data.ds.vocab, spl_psup, spl_seed, forced);
        data.ds.partition = split_images(data.ds.scenes.size(),
                                         {ratios_v[0], ratios_v[1], ratios_v[2]}, spl_seed);
        data.ds.p_sup = spl_psup;
        write_split_file(spl_out, data.ds);
        std::cout << "split: |S|=" << data.ds.vocab.source_classes().size()
                  << " |T|=" << data.ds.vocab.target_classes().size() << '\n';
        RunManifest man;
        man.command = "split";
        man.seed = spl_seed;
        man.config = {{"p_sup", std::to_string(spl_psup)}, {"ratios", spl_ratios}};
        man.add_input(spl_scenes);
        man.outputs = {spl_out};
        man.wall_seconds = timer.seconds();
        man.write(spl_out + ".manifest.json");
        return 0;
    }

    if (trn->parsed()) {
        if (!trn_config.empty()) {
            // Config file values apply first; explicit flags already hold
            // their final values, so only fill keys the user did not pass.
            const auto conf = load_config(trn_config);
            auto maybe = [&](const char* key, auto& target, const CLI::Option* opt) {
                auto it = conf.find(key);
                if (it != conf.end() && opt->count() == 0) {
                    std::istringstream ss(it->second);
                    ss >> target;
                }
            };
            maybe("epochs", tcfg.epochs, trn->get_option("--epochs"));
            maybe("batch_size", tcfg.batch_size, trn->get_option("--batch"));
            maybe("negatives_per_positive", tcfg.negatives_per_positive,
                  trn->get_option("--negatives"));
            maybe("gamma_p", tcfg.gamma_p, trn->get_option("--gamma-p"));
            maybe("gamma_v", tcfg.gamma_v, trn->get_option("--gamma-v"));
            maybe("gamma_c", tcfg.gamma_c, trn->get_option("--gamma-c"));
            maybe("adam_step", tcfg.adam_step, trn->get_option("--lr"));
            maybe("l2_weight", tcfg.l2_weight, trn->get_option("--l2"));
            maybe("seed", tcfg.seed, trn->get_option("--seed"));
            maybe("hidden", trn_hidden, trn->get_option("--hidden"));
        }
        const unsigned ctx_model = parse_ctx_model(trn_ctx_model);
        if ((ctx_model & CtxTH) && !trn_oracle)
            throw InputError("--context-model with th requires --oracle");
        tcfg.devise_mode = trn_devise;

        LoadedData data = load_data(trn_scenes, trn_bank, trn_emb, trn_split, trn_min_count);
        CheckpointMeta meta;
        {
            std::stringstream ss(trn_components);
            std::string c;
            while (std::getline(ss, c, ',')) meta.components.push_back(c);
        }
        meta.context_model = trn_ctx_model;
        meta.d = data.emb.dim;
        meta.d_visual = data.ds.d_visual;
        meta.hidden = trn_hidden > 0 ? trn_hidden : data.emb.dim;
        meta.devise = trn_devise;
        meta.oracle = trn_oracle;
        meta.normalized_dot = !trn_raw_dot;
        meta.seed = tcfg.seed;

        ScorerBundle bundle = build_bundle(meta);
        std::vector<Component> selected;
        for (const auto& c : meta.components) {
            if (c == "prior") selected.push_back(Component::Prior);
            else if (c == "visual") selected.push_back(Component::Visual);
            else if (c == "context") selected.push_back(Component::Context);
            else if (c == "joint") selected.push_back(Component::Joint);
            else throw InputError("unknown component '" + c + "'");
        }
        const auto curve = train(bundle, selected, data.ds, data.paired, tcfg);

        fs::create_directories(trn_out);
        const std::string ckpt = trn_out + "/checkpoint.czpm";
        save_checkpoint(ckpt, bundle.tensors());
        meta.write(ckpt + ".meta.json");
        write_loss_csv(trn_out + "/loss.csv", curve);

        RunManifest man;
        man.command = "train";
        man.seed = tcfg.seed;
        man.config = {{"components", trn_components}, {"context_model", trn_ctx_model},
                      {"devise", trn_devise ? "1" : "0"}, {"epochs", std::to_string(tcfg.epochs)},
                      {"batch", std::to_string(tcfg.batch_size)},
                      {"l2", std::to_string(tcfg.l2_weight)}};
        man.add_input(trn_scenes);
        man.add_input(trn_emb);
        man.add_input(trn_split);
        man.outputs = {ckpt, ckpt + ".meta.json", trn_out + "/loss.csv"};
        man.wall_seconds = timer.seconds();
        man.write(trn_out + "/manifest.json");
        std::cout << "trained " << trn_components << "; final losses:";
        for (auto it = curve.rbegin(); it != curve.rend(); ++it)
            if (it->epoch == tcfg.epochs - 1) std::cout << ' ' << it->component << '=' << it->loss;
        std::cout << '\n';
        return 0;
    }

    if (cal->parsed()) {
        LoadedData data = load_data(cal_scenes, cal_bank, cal_emb, cal_split, cal_min_count);
        CheckpointMeta meta;
        ScorerBundle bundle = load_bundle(cal_ckpt, meta);
        const RetrievalDomain mode = parse_mode(cal_mode);
        const auto cands = candidates_for(data.ds.vocab, mode);
        const auto val = make_instances(data.ds, Split::Val, mode);
        const auto scored = precompute_scores(bundle, val, data.paired, cands);
        std::vector<double> grid =
            cal_grid.empty() ? default_alpha_grid() : parse_double_list(cal_grid);
        const std::vector<double> off = {0.0};
        const bool has_ctx = meta.has("context");
        const bool has_vis = meta.has("visual") || meta.has("joint");
        // DeViSE variants carry no learned prior; alpha_p is pinned to 0.
        const bool has_pri = meta.has("prior") && !meta.devise;
        const CalibrationWeights best =
            calibrate(scored, cands, has_ctx ? grid : off, has_vis ? grid : off,
                      has_pri ? grid : off);
        const double best_mfr = mfr_for(scored, cands, best);

        nlohmann::ordered_json j;
        j["alpha_c"] = best.alpha_c;
        j["alpha_v"] = best.alpha_v;
        j["alpha_p"] = best.alpha_p;
        j["val_mfr"] = best_mfr;
        j["mode"] = cal_mode;
        std::ofstream os(cal_out);
        if (!os) throw InputError("cannot open " + cal_out);
        os << j.dump(2) << '\n';
        std::cout << "calibration: alpha_c=" << best.alpha_c << " alpha_v=" << best.alpha_v
                  << " alpha_p=" << best.alpha_p << " val MFR=" << best_mfr << "%\n";

        RunManifest man;
        man.command = "calibrate";
        man.config = {{"mode", cal_mode}};
        man.add_input(cal_ckpt);
        man.outputs = {cal_out};
        man.wall_seconds = timer.seconds();
        man.write(cal_out + ".manifest.json");
        return 0;
    }

    if (evl->parsed()) {
        LoadedData data = load_data(evl_scenes, evl_bank, evl_emb, evl_split, evl_min_count);
        CheckpointMeta meta;
        ScorerBundle bundle = load_bundle(evl_ckpt, meta);
        CalibrationWeights alpha = load_calibration(evl_calib);
        if (meta.devise) alpha = CalibrationWeights::of(alpha.alpha_c, alpha.alpha_v, 0.0);
        const RetrievalDomain mode = parse_mode(evl_mode);
        const auto cands = candidates_for(data.ds.vocab, mode);
        const auto test = make_instances(data.ds, Split::Test, mode);
        if (test.empty()) throw InputError("eval: no test instances in mode " + evl_mode);
        const auto scored = precompute_scores(bundle, test, data.paired, cands);

        std::vector<size_t> ranks;
        std::vector<std::string> labels;
        ranks.reserve(test.size());
        for (size_t i = 0; i < test.size(); ++i) {
            ranks.push_back(rank_of(scored[i].per_class, cands, test[i].true_class(), alpha));
            labels.push_back(data.ds.vocab.labels[static_cast<size_t>(test[i].true_class())]);
        }
        RankingReport rep = aggregate(ranks, cands.size(), parse_int_list(evl_ks));
        rep.mode = evl_mode;
        rep.per_class = per_class_fr(labels, ranks, cands.size());
        rep.alpha_c = alpha.alpha_c;
        rep.alpha_v = alpha.alpha_v;
        rep.alpha_p = alpha.alpha_p;
        write_report(evl_out, rep);
        std::cout << "eval mode=" << evl_mode << " n=" << cands.size() << " count=" << test.size()
                  << " MFR=" << rep.mfr << "%\n";

        RunManifest man;
        man.command = "eval";
        man.config = {{"mode", evl_mode}, {"ks", evl_ks}};
        man.add_input(evl_ckpt);
        man.add_input(evl_calib);
        man.outputs = {evl_out};
        man.wall_seconds = timer.seconds();
        man.write(evl_out + ".manifest.json");
        return 0;
    }

    if (oev->parsed()) {
        LoadedData data = load_data(oev_scenes, oev_bank, oev_emb, oev_split, oev_min_count);
        CooccurrenceTable table;
        if (oev_oracle == "textual-bayes") {
            if (oev_tokens.empty())
                throw InputError("oracle-eval: textual-bayes requires --tokens");
            table = build_text_cooc(oev_tokens, oev_window, data.ds.vocab);
        } else if (oev_oracle == "true-prior" || oev_oracle == "visual-bayes") {
            table = build_image_cooc(data.ds, /*oracle_flag=*/true);
        } else {
            throw InputError("unknown oracle '" + oev_oracle + "'");
        }
        std::optional<ScorerBundle> bundle;
        CheckpointMeta meta;
        if (!oev_ckpt.empty()) bundle = load_bundle(oev_ckpt, meta);
        VisualScorer* visual =
            bundle && bundle->visual ? &*bundle->visual : nullptr;

        const RetrievalDomain mode = parse_mode(oev_mode);
        const auto cands = candidates_for(data.ds.vocab, mode);
        const auto test = make_instances(data.ds, Split::Test, mode);
        if (test.empty()) throw InputError("oracle-eval: no test instances");

        std::vector<size_t> ranks;
        std::vector<std::string> labels;
        for (const auto& inst : test) {
            std::vector<double> scores(cands.size());
            for (size_t c = 0; c < cands.size(); ++c) {
                if (oev_oracle == "true-prior") {
                    double s = true_prior_logscore(table, cands[c], oev_eps);
                    if (visual)
                        s += oev_alpha_v * visual->logscore(inst.focus_object().feature,
                                                            data.paired.of(cands[c]));
                    scores[c] = s;
                } else {
                    scores[c] = visual_bayes_logscore(table, inst, cands[c], visual, data.paired,
                                                      oev_alpha_v, oev_alpha_p, oev_eps);
                }
            }
            size_t true_pos = cands.size();
            for (size_t c = 0; c < cands.size(); ++c)
                if (cands[c] == inst.true_class()) true_pos = c;
            size_t r = 1;
            for (size_t c = 0; c < cands.size(); ++c) {
                if (c == true_pos) continue;
                if (scores[c] > scores[true_pos] ||
                    (scores[c] == scores[true_pos] && cands[c] < cands[true_pos]))
                    ++r;
            }
            ranks.push_back(r);
            labels.push_back(data.ds.vocab.labels[static_cast<size_t>(inst.true_class())]);
        }
        RankingReport rep = aggregate(ranks, cands.size(), parse_int_list(oev_ks));
        rep.mode = oev_mode;
        rep.oracle = true;
        rep.per_class = per_class_fr(labels, ranks, cands.size());
        rep.alpha_v = oev_alpha_v;
        rep.alpha_p = oev_alpha_p;
        write_report(oev_out, rep);
        std::cout << "oracle=" << oev_oracle << " mode=" << oev_mode << " MFR=" << rep.mfr
                  << "%\n";

        RunManifest man;
        man.command = "oracle-eval";
        man.config = {{"oracle", oev_oracle}, {"mode", oev_mode}};
        man.add_input(oev_scenes);
        man.outputs = {oev_out};
        man.wall_seconds = timer.seconds();
        man.write(oev_out + ".manifest.json");
        return 0;
    }

    if (exp->parsed()) {
        LoadedData data = load_data(exp_scenes, exp_bank, exp_emb, exp_split, exp_min_count);
        CheckpointMeta meta;
        ScorerBundle bundle = load_bundle(exp_ckpt, meta);
        const RetrievalDomain mode = parse_mode(exp_mode);
        const auto cands = candidates_for(data.ds.vocab, mode);
        const auto test = make_instances(data.ds, Split::Test, mode);
        Rng rng(exp_seed);
        export_component_scores(exp_out, bundle, test, data.paired, cands, exp_negatives, rng);
        std::cout << "exported " << test.size() * static_cast<size_t>(1 + exp_negatives)
                  << " rows to " << exp_out << '\n';
        RunManifest man;
        man.command = "export-scores";
        man.seed = exp_seed;
        man.config = {{"mode", exp_mode}, {"negatives", std::to_string(exp_negatives)}};
        man.add_input(exp_ckpt);
        man.outputs = {exp_out};
        man.wall_seconds = timer.seconds();
        man.write(exp_out + ".manifest.json");
        return 0;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const CLI::ParseError&) {
        return kExitUsage;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    }
}
