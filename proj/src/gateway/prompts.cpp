#include "chartloom/gateway/prompts.hpp"

#include <algorithm>
#include <cctype>

#include "chartloom/error.hpp"

namespace chartloom::gateway {

namespace {

constexpr std::string_view kOverview = R"(You are a data analyst with a background in exploratory data analysis (EDA): descriptive statistics, distributions, trends over time, group comparisons, correlations, outliers and missing data, and the chart types that best expose each of these.

## Task
Build a data overview for the tables below. Conduct 5 to 8 EDA probe aspects tailored to the column types (for example: temporal trend of a key metric, ranking of categories, distribution and spread, relationship between two numeric columns, notable outliers, coverage and missing values). Each probe must cite concrete values from the tables.

## Table profiles
{profiles}

## Sample rows
{tables}

## Output Format
## Overview
<one paragraph describing what the dataset covers>

## Probe Findings
1. <probe aspect>: <finding with concrete values>
2. ...
)";

constexpr std::string_view kOutline = R"(## Task

Generate a compelling data report outline centered around User Intent.

## Task Details

- Generate an outline of the report following a linear narrative structure considering the data summaries.

- A linear narrative structure is defined as the narrative structure that contain a start, a middle, and an end. Think of it as setting the scene, unveiling the adventure, and wrapping up with a satisfying conclusion.

- Each point in the outline should be broken down into smaller subpoints that highlight specific aspects of the data. These may include: significant figures or patterns, noteworthy exceptions or deviations, and comparisons or changes over time. Add instructions for visualizations (e.g., charts) where necessary.

- The data report’s overarching theme should focus on {user_intent}. Make sure this sentiment is consistent throughout the outline.

- Remember, the essence of a compelling data report is not just in the numbers but in how you tell, so inclusion of visualization instruction is of utmost importance.

- Be specific, be clear, and most importantly, be engaging. The generated outline must coherently and logically relate to the attributes of the data. Be as specific as possible.

## User Intent

{user_intent}

## Data Summaries

{summaries}

## Output Format

Generate the outline in a single Markdown code block following this structure:

"""
# Data Report Title

## <Section Title Aligned with User Intent>

- Point covering specific aspect of the data

- ...

## ...

- ...
"""
)";

constexpr std::string_view kReport = R"(## Task

Your task is to generate a comprehensive data analysis report based on the provided Outline.

## Task Details

1. **Focus on User Intent**: The report theme must align with the provided user intent: {user_intent}.

2. **Follow the Outline**: The report must strictly adhere to the structure and narrative flow defined in the outline.

3. **Elaborate on Sections**: Flesh out each section of the outline with detailed analysis, insights, and clear, professional prose

4. **Visualization Requests**: When a visualization is needed, generate a brief visualization request enclosed in `<visualization></visualization>` tags based on the data summaries. The `Visualization Requests` means a natural-language plain text that states there is a need for a visualization to support the analysis. The content in the `<visualization></visualization>` tags will be prompt a data analyst agent to create the chart.

5. **Visualization Result**: When the data analyst agent generates the chart, some result in tag `<visualization_result></visualization_result>` including the chart image will be appended following the visualization request tag `<visualization></visualization>`.

6. **Continuation Behavior**: After each `<visualization_result></visualization_result>` tag, continue the report with 2-4 sentences of analysis, insights, and clear, professional prose.

## User Intent

{user_intent}

## Outline

{outline}

## Visualization Format

Write a concise natural-language visualization request inside `<visualization></visualization>`.
Just state the visualization goal and message.

Example:

"""
<visualization>

Compare regions by their average monthly sales in 2024 to identify top and under performing regions. Focus on region names and average monthly sales; exclude regions with fewer than 10 records in 2024.

</visualization>

"""

## Output Format

Just output the report text without any explanation with Markdown format.
When the report is complete, end it with <EOS>.
)";

constexpr std::string_view kPlanning = R"(You are a professional data analyst and chart designer.

## Task
- Your task is to analyze the user input and generate a visualization description with necessary information.
- The visualization description must be put in <visualization></visualization> tag.

{chart_style}

## Data tables
The data tables provide the raw data used for Visualization.

{summaries}

{tables}

## Output Format
The output visualization description must strictly follow the following yaml format:
"""
chart_type: <Chart type>
title: <Title of the visualization>
data: <All data to be visualized>
labels: <Description of the axis labels, legends, and other text labels>
"""

## User Input
{request}
)";

constexpr std::string_view kCaption = R"(## Task
Your task is to generate a concise, and descriptive caption for the provided Picture with title {title} and user intent {user_intent}.
The Picture provided is a chart generated based on the `Visualization Request`:
{visualization_request}

You should generate a caption that accurately and clearly based on the `Visualization Request`.

## Output Format
Just output the caption in plain text without any explanation.
)";

constexpr std::string_view kCodegen = R"(You write plotting programs in the {dialect} dialect.

## Task
Write one complete, self-contained program that renders the chart described by the visualization specification below and saves it as a PNG image to the path held in the variable OUTPUT_PATH. Use every data record in the specification; do not read any external files. Apply the labels, annotations, and reference lines exactly as specified.

## Visualization Specification
```yaml
{spec}
```

## Output Format
Return the program in a single fenced code block and nothing else.
)";

constexpr std::string_view kCritique = R"(## Task
You are reviewing a rendered chart titled "{title}". Identify concrete visual quality issues: overlapping or truncated labels, unreadable fonts, missing axis titles or units, misleading scales, clutter, poor color contrast, annotations placed away from their data points, and legend problems.

## Output Format
A short list of specific, actionable fixes in plain text.
)";

constexpr std::string_view kRefine = R"(You write plotting programs in the {dialect} dialect.

## Task
Revise the program below so that the rendered chart addresses every point of the reviewer feedback while still matching the visualization specification. Keep saving the PNG to OUTPUT_PATH.

## Visualization Specification
```yaml
{spec}
```

## Current Program
```
{code}
```

## Reviewer Feedback
{feedback}

## Output Format
Return the complete revised program in a single fenced code block and nothing else.
)";

constexpr std::string_view kSelect = R"(## Task
The {count} charts attached are candidate renderings for the same visualization request. They are labeled Candidate 0 to Candidate {last} in the order attached. Evaluate the quality of each against the request: faithfulness to the requested content, readability, and annotation quality.

## Visualization Request
{request}

## Output Format
Reply with the number of the best candidate only.
)";

constexpr std::string_view kJudgeOutput = R"(

## Output Format
Rank all reports from best to worst. Ties are not allowed. End your reply with one final line of exactly this form, using every Report ID once:
RANKING: <Report ID> > <Report ID> > ...
The Report IDs are: {labels}
)";

constexpr std::string_view kJudgeLayout = R"(## Task
Your task is to evaluate and compare the chart layouts, determining which one best utilizes spatial arrangement to tell a compelling data-driven story.

## Layout Evaluation Criteria
Layout refers to how charts, text, and graphical elements are orchestrated to guide the reader's understanding. Based on the provided examples, the ideal layout should function like a data journalism piece, prioritizing:

- **Narrative-Integrated Flow**: Prefer layouts where the visual hierarchy mirrors the analytical logic. Look for a structure that moves from "Setting the Scene" (descriptive maps/distributions) to "Deep Dives" (scatter plots/trends) and ends with a "Synthesis" (conclusion).
- **Embedded Insight & Annotation**: Prefer layouts that place insights *inside* the chart boundaries. High scores go to layouts using **direct labeling, arrows pointing to outliers, and on-chart text boxes** (e.g., "Significant drop..." or "Inverse Relationship") rather than relying solely on external captions.
- **Synthesized Dashboarding**: Prefer reports that utilize a **multi-panel dashboard** layout (typically at the end) to aggregate key metrics (maps, trends, and stats) into a single high-level view for cross-metric comparison.
- **Question-Driven Scaffolding**: Prefer layouts where section headers pose a question (e.g., "Is Access Improving?") and the immediately following chart provides the visual answer. The chart titles should be statement-based summaries of the data.
- **Statistical & Visual Consistency**: Prefer layouts that maintain a rigid grid for complex elements—such as aligning **diverging bar charts** or **scatter plots with LOESS curves**—ensuring that reference lines (medians, averages) and error bars are legible and consistent across different figures.

## Input
I have uploaded the chart pictures below. They are grouped by Report ID.)";

constexpr std::string_view kJudgeRead = R"(## Task
Your task is to evaluate the quality and readability of chart images from multiple reports.

## Evaluation Criteria
You will assess how effectively the charts communicate complex analytical findings. Based on the provided examples, high-quality charts should prioritize **statistical depth**, **narrative context**, and **multidimensional synthesis**. Use the following specific criteria:

- **Statistical & Analytical Rigor**: Prefer charts that go beyond raw data points to include statistical enhancements. Look for features such as **trend lines (e.g., LOESS smoothing)** to show correlations, **error bars/confidence intervals** to show variability, or **logarithmic scales** to handle exponential data.
- **Narrative-Driven Annotation**: Prefer charts that integrate the "story" directly into the visual. The chart should use **descriptive titles, callout boxes, and direct labeling** of anomalies or key insights (e.g., "Largest decline in delayed care") rather than requiring the reader to hunt for meaning.
- **Multidimensional Synthesis (Dashboarding)**: Prefer visualizations that combine multiple related metrics into a single coherent view (e.g., a dashboard combining maps, trend lines, and bar charts). High scores go to layouts that synthesize **geography, frequency, and magnitude/intensity** in one glance.
- **Distributional & Comparative Clarity**: Prefer charts that reveal the *shape* of the data rather than just averages. Look for **box plots** showing spreads, **diverging bar charts** showing positive/negative splits, or **histograms** with reference lines (e.g., "Citywide Median") that allow for immediate benchmarking.
- **Geospatial & Temporal Context**: When location or time is relevant, prefer charts that effectively map data to **geographic clusters** (e.g., bubble maps, choropleth maps) or show clear **temporal evolution** (e.g., distinct pre/post periods or long-term trends) without visual clutter.

## Input
I have uploaded the chart pictures below. They are grouped by Report ID.)";

constexpr std::string_view kJudgeTcCons = R"(## Task
Your task is to evaluate and rank the quality of text-image pairs across multiple reports based on **Text-Chart Consistency**.

## Text–Chart Consistency Evaluation Criteria

Text–chart consistency refers to how tightly the written analysis is anchored to specific charts and tables. When comparing reports, prioritize those where:

* **Unified concepts and metrics**: Key terms and indicators are defined once and then used with the same names, units, and thresholds across text, tables, and figures.
* **One-to-one text–figure alignment**: Every major conclusion in the text can be directly traced to a specific chart/table with matching time range, variables, and comparison groups.
* **Explicit data scope and limits**: Charts clearly mark data ranges, assumptions, and missing or incomplete data, and the text reiterates these limits when interpreting the results.
* **Integrative Summary Visuals**: Dashboards or synthesis figures are used to recap key patterns, and concluding text explicitly walks through these visuals to close the loop.

## Input
I have uploaded the text-image pairs below, grouped by Report ID and corresponding shortname of generation method.)";

constexpr std::string_view kJudgeDepth = R"(## Task
Your task is to evaluate and rank the quality of text-image pairs across multiple reports based on **Informative Depth**.

## Text–Depth Evaluation Criteria
Text–depth refers to how effectively the report converts data and visuals into a structured, system-level story rather than a set of isolated comments. When comparing reports, prioritize those where:
* **Multi-Dimensional Coverage**: Figures jointly span time, space, magnitude, and energy (or equivalent key dimensions), forming an integrated dashboards or overview tables rather than a single-angle view.
* **Deep Quantitative Interpretation**: Text consistently interprets full distributions and key statistics (e.g., typical levels, variability, skew, anomalies) and ties them back to core questions such as whether patterns are increasing or abnormal.
* **Closed-Loop Visual–Text Logic**: Figures and prose are organized around a small set of recurring themes, with later sections integrating earlier findings into concise, decision-ready conclusions.

## Input
I have uploaded the text-image pairs below, grouped by Report ID.)";

constexpr std::string_view kJudgeInfo = R"(## Task
Your task is to evaluate and rank the informativeness of multiple reports.

## Report Information Richness
Report information richness means the report, through tightly integrated visuals and text, addresses the title’s core question across multiple key dimensions rather than listing isolated results. When comparing reports, prioritize those where:

* **Multi-Dimensional Visuals**: Charts within the same report jointly cover temporal trends, spatial patterns, and magnitude–energy relationships in a consistent layout, giving each figure and the overall visual set high information density.
* **Explanatory Text Backbone**: The prose is organized around the core question, explains key concepts and metrics, and links observations, plausible causes, and conclusions into a coherent narrative that continuously enriches each visual.
* **Integrated Synthesis**: A final integrative summary or dashboard pulls together frequency, intensity, and energy into a compact global view, turning detailed analyses into a reusable analytical overview.
* **Content Volume & Distribution**: The report demonstrates depth through substantial **total word count** and maintains a high quantity of **text and images per chapter**, ensuring consistent detailed coverage across all sections.

## Input
I have uploaded the report content below. They are grouped by Report ID.)";

constexpr std::string_view kJudgeVisCons = R"(## Task
Your task is to evaluate and rank the visualization consistency of multiple reports.

## Visualization Consistency
Visualization consistency means the report adheres to a rigorous, unified design language suitable for professional publication, ensuring that distinct visual elements across various sections feel like parts of a single, cohesive system. When comparing reports, prioritize those where:

* **Unified Design System**: A strict adherence to a specific color palette and font hierarchy is maintained across all figures. The visual identity (e.g., primary and secondary colors) remains unmistakable whether the viewer is looking at a line chart, a bar graph, or a complex density plot.
* **Semantic Visual Logic**: Color and style usage is logical and semantic rather than random. For instance, specific colors represent the specific datasets or variables consistently across different chart types, allowing the reader to track a variable intuitively throughout the report without re-learning the legend.
* **Standardized Structural Elements**: There is a meticulous uniformity in the treatment of non-data ink, including gridline opacity, axis label formatting, legend placement, and annotation styles.
* **Publication-Ready Polish**: The visualizations demonstrate a flawless execution devoid of style clashes, ensuring that even when chart types vary significantly, the overall visual presentation remains polished and professional.

## Input
I have uploaded the report content below. They are grouped by Report ID.)";

constexpr std::string_view kRichnessExtract = R"(## Task
Decompose the report text below into atomic propositions. Each proposition is one self-contained factual statement that can be understood without the surrounding text; split compound sentences into several propositions and resolve pronouns to the entities they refer to. Do not add information that is not in the text.

## Report
{report_text}

## Output Format
One proposition per line, each line starting with "- ". No other text.
)";

constexpr std::string_view kRichnessClassify = R"(## Task
Classify each numbered proposition extracted from a data report into exactly one category:
- invalid: factually incorrect, hallucinated, or not grounded in the report's data.
- duplicate: repeats semantic content already expressed by an earlier proposition in this list.
- simplified: valid, non-redundant, and contributes unique semantic content.

## Propositions
{propositions}

## Output Format
One line per proposition in the form "<number>: <category>". No other text.
)";

std::string judge_body(std::string_view rubric) { return std::string(rubric) + std::string(kJudgeOutput); }

const std::map<std::string, PromptTemplate, std::less<>>& registry() {
  static const auto* templates = [] {
    auto* m = new std::map<std::string, PromptTemplate, std::less<>>;
    auto add = [&](std::string id, std::string body) { m->emplace(id, PromptTemplate{id, std::move(body)}); };
    add("overview", std::string(kOverview));
    add("outline", std::string(kOutline));
    add("report", std::string(kReport));
    add("planning", std::string(kPlanning));
    add("caption", std::string(kCaption));
    add("chart.codegen", std::string(kCodegen));
    add("chart.critique", std::string(kCritique));
    add("chart.refine", std::string(kRefine));
    add("chart.select", std::string(kSelect));
    add("judge.read", judge_body(kJudgeRead));
    add("judge.layout", judge_body(kJudgeLayout));
    add("judge.tc_cons", judge_body(kJudgeTcCons));
    add("judge.depth", judge_body(kJudgeDepth));
    add("judge.info", judge_body(kJudgeInfo));
    add("judge.vis_cons", judge_body(kJudgeVisCons));
    add("richness.extract", std::string(kRichnessExtract));
    add("richness.classify", std::string(kRichnessClassify));
    return m;
  }();
  return *templates;
}

bool slot_char(char c, bool first) {
  return c == '_' || std::islower(static_cast<unsigned char>(c)) || (!first && std::isdigit(static_cast<unsigned char>(c)));
}

// Length of a "{name}" slot starting at `pos`, or 0.
std::size_t slot_at(std::string_view body, std::size_t pos) {
  if (body[pos] != '{') return 0;
  std::size_t i = pos + 1;
  while (i < body.size() && slot_char(body[i], i == pos + 1)) ++i;
  if (i == pos + 1 || i >= body.size() || body[i] != '}') return 0;
  return i - pos + 1;
}

}  // namespace

const PromptTemplate& prompt_template(std::string_view id) {
  const auto& m = registry();
  auto it = m.find(id);
  if (it == m.end()) throw PreconditionError("unknown prompt template '" + std::string(id) + "'");
  return it->second;
}

std::vector<std::string> template_ids() {
  std::vector<std::string> ids;
  for (const auto& [id, _] : registry()) ids.push_back(id);
  return ids;
}

std::vector<std::string> template_slots(std::string_view body) {
  std::vector<std::string> slots;
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (auto len = slot_at(body, i)) {
      std::string name(body.substr(i + 1, len - 2));
      if (std::find(slots.begin(), slots.end(), name) == slots.end()) slots.push_back(std::move(name));
      i += len - 1;
    }
  }
  return slots;
}

std::string render_body(std::string_view body, const SlotValues& slots) {
  std::string out;
  out.reserve(body.size());
  for (std::size_t i = 0; i < body.size();) {
    if (auto len = slot_at(body, i)) {
      std::string name(body.substr(i + 1, len - 2));
      auto it = slots.find(name);
      if (it == slots.end()) throw PreconditionError("missing prompt slot '" + name + "'");
      out += it->second;
      i += len;
    } else {
      out += body[i++];
    }
  }
  return out;
}

std::string render_prompt(std::string_view template_id, const SlotValues& slots) {
  return render_body(prompt_template(template_id).body, slots);
}

}  // namespace chartloom::gateway
