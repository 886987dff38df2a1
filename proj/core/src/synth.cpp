#include "rjm/synth.hpp"

#include <algorithm>
#include <array>
#include <cstdio>

#include "rjm/rng.hpp"

namespace rjm {
namespace {

struct Track {
  std::array<const char*, 6> ladder;
  std::array<const char*, 3> departments;
  std::array<const char*, 2> industries;
  std::array<const char*, 2> majors;
  int salary_offset;
  int size_base;
  int degree;
  double male_share;
};

// Software first; software_track_positions() relies on it.
const std::array<Track, 8> kTracks{{
    {{"软件测试", "技术支持", "开发工程师", "软件工程师", "高级软件工程师", "技术经理"},
     {"测试部", "研发部", "技术中心"},
     {"计算机/互联网", "通信/电子"},
     {"计算机科学与技术", "软件工程"},
     0, 3, 2, 0.75},
    {{"销售代表", "销售专员", "客户经理", "销售主管", "区域经理", "销售总监"},
     {"销售部", "市场部", "大客户部"},
     {"快速消费品", "贸易/进出口"},
     {"市场营销", "国际经济/贸易"},
     0, 2, 1, 0.55},
    {{"出纳", "会计", "财务专员", "主管会计", "财务经理", "财务总监"},
     {"财务部", "审计部", "资金部"},
     {"金融/银行", "会计/审计"},
     {"会计学", "金融学"},
     0, 4, 1, 0.3},
    {{"行政助理", "人事专员", "招聘专员", "人力资源主管", "人力资源经理", "人力资源总监"},
     {"行政部", "人事部", "人力资源部"},
     {"专业服务", "教育/培训"},
     {"人力资源管理", "行政管理"},
     -1, 2, 1, 0.25},
    {{"操作工", "技术员", "质检员", "工艺工程师", "生产主管", "生产经理"},
     {"生产部", "质量部", "工程部"},
     {"机械/制造", "汽车/零配件"},
     {"机械设计制造及其自动化", "材料成型及控制工程"},
     -1, 5, 0, 0.85},
    {{"设计助理", "美工", "平面设计师", "UI设计师", "设计主管", "设计总监"},
     {"设计部", "创意部", "品牌部"},
     {"广告/媒体", "艺术/设计"},
     {"艺术设计", "视觉传达"},
     0, 1, 1, 0.4},
    {{"收银员", "营业员", "店长助理", "店长", "区域督导", "运营经理"},
     {"门店", "运营部", "客服部"},
     {"零售/批发", "餐饮/酒店"},
     {"工商管理", "旅游管理"},
     -2, 1, 0, 0.35},
    {{"仓管员", "物流专员", "采购专员", "采购主管", "供应链经理", "物流经理"},
     {"物流部", "采购部", "供应链管理部"},
     {"物流/运输", "电子商务"},
     {"物流管理", "电子商务"},
     -1, 3, 0, 0.6},
}};

constexpr std::array<const char*, 3> kTypes{"全职", "兼职", "实习"};
constexpr int kReferenceYear = 2016;
constexpr int kReferenceMonth = 6;

int clamp_band(int v, int hi) { return std::clamp(v, 0, hi); }

Resume make_resume(Rng& rng, const SynthOptions& opt, std::size_t index) {
  double total_weight = opt.tech_weight + static_cast<double>(kTracks.size() - 1);
  double pick = rng.uniform() * total_weight;
  std::size_t t = 0;
  if (pick >= opt.tech_weight) t = 1 + std::min<std::size_t>(kTracks.size() - 2, static_cast<std::size_t>(pick - opt.tech_weight));
  const Track& track = kTracks[t];

  Resume r;
  char id[32];
  std::snprintf(id, sizeof id, "syn%06zu%08llx", index, static_cast<unsigned long long>(rng.next() & 0xffffffffULL));
  r.id = id;
  if (rng.bernoulli(opt.signal)) {
    r.degree = track.degree;
    if (rng.bernoulli(0.15)) r.degree = clamp_band(r.degree + (rng.bernoulli(0.5) ? 1 : -1), 2);
  } else {
    r.degree = static_cast<int>(rng.below(3));
  }
  if (rng.bernoulli(opt.signal)) {
    r.major = track.majors[rng.below(2)];
  } else {
    const Track& other = kTracks[rng.below(kTracks.size())];
    r.major = other.majors[rng.below(2)];
  }
  r.gender = rng.bernoulli(track.male_share) ? "男" : "女";

  const int n = 1 + static_cast<int>(rng.below(6));
  int rung = static_cast<int>(rng.below(3));
  const int preferred_size = clamp_band(track.size_base + static_cast<int>(rng.below(2)), 5);

  std::vector<int> months(n);
  int total_months = 0;
  for (int j = 0; j < n; ++j) {
    months[j] = 3 * (2 + static_cast<int>(rng.below(12))) + static_cast<int>(rng.below(3));
    total_months += months[j] + static_cast<int>(rng.below(3));
  }
  const bool still_employed = rng.bernoulli(0.7);
  const int end_index = kReferenceYear * 12 + (kReferenceMonth - 1) - (still_employed ? 0 : static_cast<int>(rng.below(6)));
  int cursor = end_index - total_months;

  for (int j = 0; j < n; ++j) {
    WorkExperience e;
    const bool on_track = rng.bernoulli(opt.signal);
    int shown_rung = rung;
    const Track* shown = &track;
    if (on_track) {
      if (j > 0 && rng.bernoulli(0.65)) rung = std::min(rung + 1, 5);
      shown_rung = rung;
    } else {
      shown = &kTracks[rng.below(kTracks.size())];
      shown_rung = static_cast<int>(rng.below(6));
    }
    e.position_name = shown->ladder[shown_rung];
    e.department = shown->departments[std::min(2, shown_rung / 2)];
    if (rng.bernoulli(0.1)) e.department = std::string(kEmptyPhrase);
    e.industry = shown->industries[rng.below(2)];
    int jitter = 0;
    const double u = rng.uniform();
    if (u < 0.15) jitter = -1;
    else if (u > 0.85) jitter = 1;
    e.salary = clamp_band(shown_rung + shown->salary_offset + 1 + jitter, 6);
    e.size = rng.bernoulli(opt.signal) ? preferred_size : static_cast<int>(rng.below(6));
    const double ty = rng.uniform();
    if (shown_rung == 0 && ty < 0.15) e.experience_type = kTypes[2];
    else if (ty < 0.10) e.experience_type = kTypes[0];
    else if (ty < 0.13) e.experience_type = kTypes[1];

    e.start_date = YearMonth::from_months(cursor);
    cursor += months[j];
    const bool last = j + 1 == n;
    if (!(last && still_employed)) e.end_date = YearMonth::from_months(cursor);
    cursor += static_cast<int>(rng.below(3));
    e.quarter_count = whole_quarters(e.start_date, e.end_date.value_or(YearMonth{kReferenceYear, kReferenceMonth}));
    r.experiences.push_back(std::move(e));
  }
  const int years = total_months / 12;
  r.age = 21 + r.degree + years + static_cast<int>(rng.below(4));
  return r;
}

}  // namespace

std::vector<Resume> synthesize_resumes(const SynthOptions& options) {
  Rng rng(options.seed);
  std::vector<Resume> out;
  out.reserve(options.count);
  for (std::size_t i = 0; i < options.count; ++i) out.push_back(make_resume(rng, options, i));
  return out;
}

std::string synthesize_records(const SynthOptions& options) {
  std::string text;
  for (const auto& r : synthesize_resumes(options)) {
    text += serialize_resume(r);
    text += '\n';
  }
  return text;
}

std::vector<std::string> software_track_positions() {
  return {kTracks[0].ladder.begin(), kTracks[0].ladder.end()};
}

}  // namespace rjm
