#include <CLI11.hpp>

#include <csignal>
#include <iostream>

#include "pubbie/features.hpp"
#include "pubbie/file_util.hpp"
#include "pubbie/metrics.hpp"
#include "pubbie/model_io.hpp"
#include "pubbie/naive_bayes.hpp"
#include "pubbie/service.hpp"
#include "pubbie/strings.hpp"

using namespace pubbie;

namespace {

HttpServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

Config load_config(const std::string& path) { return path.empty() ? Config{} : Config::load(path); }

// Publications carrying a ground-truth program label, in file order.
std::vector<Publication> labeled_publications(const std::string& csv_path) {
  Store store(":memory:");
  const auto report = store.ingest_csv(read_file(csv_path));
  if (!report.errors.empty()) std::cerr << report.summary() << '\n';
  std::vector<Publication> out;
  for (auto& pub : store.all_publications()) {
    if (pub.prog_source == LabelSource::GroundTruth) out.push_back(std::move(pub));
  }
  if (out.empty()) throw Error(ErrorCode::EmptyCorpus, "no labeled rows in " + csv_path);
  return out;
}

template <typename Predict>
void report_split(const std::vector<Publication>& pubs, const SplitSpec& split, Predict&& predict) {
  auto eval = [&](const char* name, const std::vector<std::size_t>& idx) {
    if (idx.empty()) return;
    std::vector<ProgramLabel> pred;
    std::vector<ProgramLabel> gold;
    for (auto i : idx) {
      pred.push_back(predict(i));
      gold.push_back(pubs[i].prog);
    }
    std::cout << name << " (" << idx.size() << "): " << evaluate(pred, gold).to_text();
  };
  std::cout << "split: " << split.train.size() << " train / " << split.val.size() << " validation / "
            << split.test.size() << " test\n";
  eval("validation", split.val);
  eval("test", split.test);
}

int run_chat(Runtime& rt, bool debug) {
  auto& svc = *rt.service;
  const auto id = svc.create_session();
  std::cout << "session " << id << "\n"
            << "Type a question, /upload <csv>, /export <path>, or /quit.\n";
  std::string line;
  while (std::cout << "> " << std::flush, std::getline(std::cin, line)) {
    const auto text = std::string(strings::trim(line));
    if (text.empty()) continue;
    if (text == "/quit") break;
    try {
      ChatTurn turn;
      if (text.rfind("/upload ", 0) == 0) {
        turn = svc.post_upload(id, read_file(std::string(strings::trim(text.substr(8)))));
      } else if (text.rfind("/export ", 0) == 0) {
        auto exported = svc.get_export(id);
        write_file(std::string(strings::trim(text.substr(8))), exported.bytes);
        turn = exported.turn;
      } else {
        turn = svc.post_chat(id, text);
      }
      if (debug) {
        for (const auto& e : turn.stage_trace) std::cout << "  [" << llm::to_string(e.stage) << "] " << e.text << '\n';
        for (const auto& w : turn.warnings) std::cout << "  warning: " << w << '\n';
        if (turn.sql) std::cout << "  sql: " << *turn.sql << '\n';
      }
      std::cout << turn.agent_text << '\n';
    } catch (const Error& e) {
      std::cout << "error: " << to_string(e.code()) << ": " << api_error(e.code()).message << '\n';
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pubbie: a chat agent over a publication database"};
  app.require_subcommand(1);
  std::string config_path;
  bool debug = false;
  app.add_option("--config", config_path, "Config file (key = value)");
  app.add_flag("--debug", debug, "Show stage traces and warnings");

  auto* serve = app.add_subcommand("serve", "Run the HTTP API");
  std::string bind_addr;
  serve->add_option("--bind", bind_addr, "host:port, overrides server.bind_addr");

  auto* ingest = app.add_subcommand("ingest", "Load a CSV into the store, predicting missing programs");
  std::string ingest_csv;
  ingest->add_option("csv", ingest_csv)->required();

  auto* train_nb = app.add_subcommand("train-nb", "Fit bag-of-words Naive Bayes on a labeled CSV");
  std::string nb_csv;
  std::string nb_out;
  double alpha = 1.0;
  std::uint64_t seed = 42;
  train_nb->add_option("csv", nb_csv)->required();
  train_nb->add_option("--out", nb_out, "Where to save the model");
  train_nb->add_option("--alpha", alpha, "Laplace smoothing")->capture_default_str();
  train_nb->add_option("--seed", seed, "Split seed")->capture_default_str();

  auto* train_head = app.add_subcommand("train-head", "Fit a softmax head on cached 768-dim embeddings");
  std::string head_csv;
  std::string head_out;
  std::string embeddings;
  HeadTrainConfig head_config;
  train_head->add_option("csv", head_csv)->required();
  train_head->add_option("--embeddings", embeddings, "Embedding cache file")->required();
  train_head->add_option("--out", head_out, "Where to save the model");
  train_head->add_option("--seed", seed, "Split seed")->capture_default_str();
  train_head->add_option("--epochs", head_config.epochs)->capture_default_str();
  train_head->add_option("--lr", head_config.learning_rate)->capture_default_str();

  auto* eval = app.add_subcommand("eval-nl2sql", "Score text-to-SQL generation against a gold corpus");
  std::string corpus;
  std::string fixture;
  eval->add_option("corpus", corpus)->required();
  eval->add_option("--fixture", fixture, "CSV loaded into a scratch in-memory store instead of store.path");

  auto* chat = app.add_subcommand("chat", "Interactive console session");

  auto* templates = app.add_subcommand("write-templates", "Write the built-in prompt templates to a directory");
  std::string templates_dir;
  templates->add_option("dir", templates_dir)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train_nb) {
      const auto pubs = labeled_publications(nb_csv);
      const auto split = make_split(pubs.size(), seed);
      std::vector<LabeledText> corpus_items;
      for (auto i : split.train) corpus_items.emplace_back(render_features(pubs[i]), pubs[i].prog);
      const auto model = train_naive_bayes(corpus_items, alpha);
      report_split(pubs, split, [&](std::size_t i) { return predict_nb(model, render_features(pubs[i])).label; });
      if (!nb_out.empty()) save_model(nb_out, model);
      return 0;
    }
    if (*train_head) {
      const auto pubs = labeled_publications(head_csv);
      const auto split = make_split(pubs.size(), seed);
      llm::CachedProvider cache(llm::EmbeddingCache::load(embeddings), nullptr, true);
      std::vector<std::string> texts;
      for (const auto& p : pubs) texts.push_back(render_features(p).rendered);
      const auto vectors = cache.embed(texts);
      std::vector<Embedding> train_x;
      std::vector<ProgramLabel> train_y;
      for (auto i : split.train) {
        train_x.push_back(vectors[i]);
        train_y.push_back(pubs[i].prog);
      }
      head_config.seed = seed;
      const auto head = train_linear_head(train_x, train_y, head_config);
      std::cout << "final training loss " << head.final_loss << '\n';
      report_split(pubs, split, [&](std::size_t i) { return predict_linear(head, vectors[i]).label; });
      if (!head_out.empty()) save_model(head_out, head);
      return 0;
    }
    if (*templates) {
      TemplateRegistry{}.save_dir(templates_dir);
      return 0;
    }

    auto config = load_config(config_path);
    if (*eval && !fixture.empty()) config.store_path = ":memory:";
    if (*serve && !bind_addr.empty()) config.server_bind_addr = bind_addr;
    auto rt = make_runtime(config, debug);

    if (*ingest) {
      const auto report = rt->store->ingest_csv(read_file(ingest_csv), make_labeler(config, rt->provider));
      std::cout << report.summary() << '\n';
      return report.errors.empty() ? 0 : 3;
    }
    if (*eval) {
      if (!fixture.empty()) {
        rt->store->ingest_csv(read_file(fixture));
        rt->orchestrator->refresh_index();
      }
      const auto report = rt->orchestrator->evaluate_text_to_sql(parse_nl2sql_cases(read_file(corpus)));
      std::cout << report.to_text();
      return 0;
    }
    if (*chat) return run_chat(*rt, debug);
    if (*serve) {
      HttpServer server(*rt->service);
      const auto [host, port] = split_bind_addr(config.server_bind_addr);
      const int bound = server.bind(host, port);
      std::cout << "listening on http://" << host << ':' << bound << std::endl;
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      server.listen();
      g_server = nullptr;
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: INTERNAL: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
