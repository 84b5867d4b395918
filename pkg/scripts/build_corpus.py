"""Build the bundled corpus, mock fixtures, and survey sample.

Everything here is deterministic index math, no RNG: rerunning the script
reproduces the same bytes. The corpus realizes fixed pooled detection counts
per domain (matched/detected/reference = 87/104/100 coding, 87/113/100
data_analysis, 64/86/100 creative_writing) by assigning per-record miss and
extra counts; two records (sql-orders, temperature) are pinned end to end so
their sessions replay exactly, misses and extras zero.

Run from the repository root after installing the package:

    python scripts/build_corpus.py
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

DATA_DIR = Path(__file__).resolve().parent.parent / "src" / "clarify" / "data"

POOLED_TARGETS = {
    # domain: (matched, detected, reference)
    "coding": (87, 104, 100),
    "data_analysis": (87, 113, 100),
    "creative_writing": (64, 86, 100),
}

# ---------------------------------------------------------------------------
# Pinned case studies
# ---------------------------------------------------------------------------

SQL_PROMPT = (
    "Translate the following request into SQL: Find all orders placed last "
    "month by customers with high spending habits."
)

SQL_NOTES = (
    "Schema: orders(order_id, order_date, customer_id, total_amount, "
    "order_status); customers(customer_id, name, email, registration_date, "
    "total_spent)."
)

SQL_QUERY = """\
SELECT o.order_id, o.order_date, c.customer_id, c.total_spent
FROM orders o JOIN customers c ON o.customer_id = c.customer_id
WHERE o.order_date BETWEEN '2025-02-01' AND '2025-02-28'
  AND c.total_spent > 1000;"""

SQL_AMBIGUITIES = [
    {
        "id": "A1",
        "label": "Time Frame Interpretation",
        "description": 'How should "last month" be interpreted?',
    },
    {
        "id": "A2",
        "label": 'Definition of "high spending habits"',
        "description": "What makes a customer's spending high?",
    },
]

SQL_GOLD = {
    "A1": "previous calendar month",
    "A2": "total_spent > $1,000 (default)",
}

SQL_PLAN = {
    "questions": [
        {
            "id": "Q1",
            "targets": "A1",
            "text": 'How should we interpret "last month" in the query?',
            "options": [
                {
                    "id": "A",
                    "text": "Use the previous calendar month.",
                    "resolves_to": "previous calendar month",
                    "illustration": {
                        "input": "today = 2025-03-14",
                        "output": "window 2025-02-01 .. 2025-02-28",
                    },
                },
                {
                    "id": "B",
                    "text": "Use the last 30 days relative to today.",
                    "resolves_to": "last 30 days relative to today",
                    "illustration": {
                        "input": "today = 2025-03-14",
                        "output": "window 2025-02-12 .. 2025-03-14",
                    },
                },
            ],
        },
        {
            "id": "Q2",
            "targets": "A2",
            "text": "How should we determine if a customer has high spending habits?",
            "options": [
                {
                    "id": "A",
                    "text": (
                        "Consider customers whose total spending exceeds a "
                        "specific monetary threshold."
                    ),
                    "resolves_to": "total spending exceeds a specific monetary threshold",
                },
                {
                    "id": "B",
                    "text": (
                        'Use an existing flag or field (e.g., a "VIP" status) '
                        "in the customer database."
                    ),
                    "resolves_to": "customers flagged as VIP in the database",
                },
            ],
        },
        {
            "id": "Q3",
            "targets": "A2",
            "text": "Would you like to specify the spending threshold?",
            "guard": [["Q2", "A"]],
            "allows_free_text": True,
            "options": [
                {
                    "id": "A1",
                    "text": "Yes, let me input a threshold value.",
                    "resolves_to": "total_spent > {free_text}",
                },
                {
                    "id": "A2",
                    "text": "No, use a default threshold (e.g., $1,000).",
                    "resolves_to": "total_spent > $1,000 (default)",
                },
            ],
        },
    ]
}

SQL_EXAMPLES = [
    {
        "kind": "selected",
        "input_description": (
            "Customer with customer_id 101 has total spending $1,200, and an "
            "order on 2025-02-15."
        ),
        "expected_behavior": (
            "Row returned: the order date falls inside February 2025 and "
            "total_spent exceeds 1000."
        ),
    },
    {
        "kind": "not_selected",
        "input_description": (
            "Customer with customer_id 102 has total spending $950, even if "
            "the order is within February 2025."
        ),
        "expected_behavior": "No row returned: total_spent does not exceed 1000.",
    },
    {
        "kind": "edge",
        "input_description": (
            "Customer with customer_id 103 has total spending $1,500, but the "
            "order was placed on 2024-12-28."
        ),
        "expected_behavior": (
            "No row returned: spending qualifies but the order date is "
            "outside the window."
        ),
    },
]

TEMP_PROMPT = (
    "Write a Python function that calculates the average temperature from a "
    "list of readings, excluding outliers."
)

TEMP_NOTES = (
    "The dataset is a list of numeric daily temperature readings; outliers "
    "should be identified using a statistical method."
)

TEMP_FUNCTION = """\
import numpy as np
def average_temperature(readings):
    if not readings:
        return None
    # Calculate the first and third quartiles based on the median
    q1 = np.percentile(readings, 25)
    q3 = np.percentile(readings, 75)
    iqr = q3 - q1
    lower_bound = q1 - 1.5 * iqr
    upper_bound = q3 + 1.5 * iqr
    # Filter out outliers
    filtered = [temp for temp in readings if lower_bound <= temp <= upper_bound]
    if not filtered:
        return None
    return sum(filtered) / len(filtered)"""

TEMP_AMBIGUITIES = [
    {
        "id": "A1",
        "label": "Outlier Definition",
        "description": (
            "What criteria should be used to determine outliers (e.g., using "
            "the IQR method, z-score, or a fixed threshold)?"
        ),
    },
    {
        "id": "A2",
        "label": "Statistical Basis",
        "description": (
            "Should outliers be determined relative to the median or the "
            "mean of the dataset?"
        ),
    },
    {
        "id": "A3",
        "label": "Empty Result Handling",
        "description": (
            "What should the function return if all readings are identified "
            "as outliers?"
        ),
    },
]

TEMP_GOLD = {
    "A1": "IQR method",
    "A2": "relative to the median",
    "A3": "return None when all readings are excluded",
}

TEMP_PLAN = {
    "questions": [
        {
            "id": "Q1",
            "targets": "A1",
            "text": "Which statistical method should be used to identify outliers?",
            "options": [
                {
                    "id": "A",
                    "text": "Use the IQR method.",
                    "resolves_to": "IQR method",
                    "illustration": {
                        "input": "[32, 35, 36, 38, 120]",
                        "output": "120 falls outside [30.5, 42.5] and is dropped",
                    },
                },
                {
                    "id": "B",
                    "text": "Use the z-score method.",
                    "resolves_to": "z-score method",
                },
            ],
        },
        {
            "id": "Q2",
            "targets": "A2",
            "text": "Should outliers be determined relative to the median or the mean?",
            "options": [
                {
                    "id": "A",
                    "text": "Use the median.",
                    "resolves_to": "relative to the median",
                },
                {
                    "id": "B",
                    "text": "Use the mean.",
                    "resolves_to": "relative to the mean",
                },
            ],
        },
        {
            "id": "Q3",
            "targets": "A3",
            "text": (
                "What should the function return if all readings are excluded "
                "as outliers?"
            ),
            "options": [
                {
                    "id": "A",
                    "text": "Return None.",
                    "resolves_to": "return None when all readings are excluded",
                },
                {
                    "id": "B",
                    "text": "Return 0.",
                    "resolves_to": "return 0 when all readings are excluded",
                },
            ],
        },
    ]
}

TEMP_EXAMPLES = [
    {
        "kind": "selected",
        "input_description": "readings [32, 35, 36, 38, 120]",
        "expected_behavior": (
            "120 falls outside the IQR bounds [30.5, 42.5] and is excluded; "
            "the function returns an average of 35.25."
        ),
    },
    {
        "kind": "not_selected",
        "input_description": "readings [15, 16, 15, 1000]",
        "expected_behavior": (
            "1000 is identified as an outlier; the average is computed from "
            "[15, 16, 15]."
        ),
    },
    {
        "kind": "edge",
        "input_description": "readings [1000, 1020, 980]",
        "expected_behavior": (
            "If all values are considered outliers, the function returns None."
        ),
    },
]

# ---------------------------------------------------------------------------
# Generic material per domain
# ---------------------------------------------------------------------------

# (label, description, phrase_a, phrase_b); the record's gold alternates
# between phrase_a and phrase_b so both option branches get exercised.
ASPECTS = {
    "coding": [
        (
            "Input Type",
            "The prompt never says what container the values arrive in.",
            "accept any iterable and return a new list",
            "accept only lists and raise TypeError otherwise",
        ),
        (
            "Duplicate Handling",
            "Whether repeated values are significant is unstated.",
            "collapse duplicates before processing",
            "keep duplicates and process every occurrence",
        ),
        (
            "Case Sensitivity",
            "String comparisons could be case-sensitive or not.",
            "compare strings case-insensitively",
            "compare strings with exact case",
        ),
        (
            "Empty Input Behavior",
            "Nothing says what an empty input should produce.",
            "return an empty result for empty input",
            "raise ValueError on empty input",
        ),
        (
            "Error Handling",
            "The failure mode for malformed entries is unspecified.",
            "skip malformed entries and continue",
            "abort with an exception on the first malformed entry",
        ),
        (
            "Ordering of Results",
            "The required order of the output is not given.",
            "preserve the original input order",
            "sort the output ascending before returning",
        ),
        (
            "Mutation Policy",
            "It is unclear whether the input may be modified.",
            "leave the input untouched and work on a copy",
            "modify the input in place to save memory",
        ),
        (
            "Numeric Precision",
            "The rounding rule for numeric output is unstated.",
            "round final numbers to two decimal places",
            "return full floating point precision",
        ),
    ],
    "data_analysis": [
        (
            "Aggregation Level",
            "The reporting granularity is not specified.",
            "aggregate per calendar month",
            "aggregate over the whole period",
        ),
        (
            "Missing Value Policy",
            "How incomplete rows should be treated is unstated.",
            "drop rows with missing values",
            "impute missing values with the column median",
        ),
        (
            "Outlier Treatment",
            "The prompt does not say whether extremes are kept.",
            "exclude outliers beyond 1.5 IQR",
            "keep outliers and report them separately",
        ),
        (
            "Date Range",
            "The analysis window is ambiguous.",
            "use the previous full quarter",
            "use the trailing 90 days",
        ),
        (
            "Grouping Key",
            "The unit of comparison is unclear.",
            "group by customer segment",
            "group by individual customer",
        ),
        (
            "Metric Definition",
            "Revenue could be gross or net.",
            "measure revenue net of refunds",
            "measure gross revenue including refunds",
        ),
        (
            "Normalization",
            "Whether to normalize across group sizes is unstated.",
            "normalize values per 1,000 users",
            "report raw absolute values",
        ),
        (
            "Output Granularity",
            "One table or many is not specified.",
            "produce one summary table",
            "produce per-group detail tables",
        ),
    ],
    "creative_writing": [
        (
            "Narrative Perspective",
            "The point of view is not specified.",
            "first person narration",
            "third person limited narration",
        ),
        (
            "Tone",
            "The emotional register is left open.",
            "keep a hopeful, light tone",
            "keep a somber, reflective tone",
        ),
        (
            "Time Period",
            "When the story takes place is unstated.",
            "set the story in the present day",
            "set the story in the early 1900s",
        ),
        (
            "Protagonist Detail",
            "Who carries the story is unclear.",
            "center on a single named protagonist",
            "follow an ensemble of three characters",
        ),
        (
            "Length Target",
            "No length is given.",
            "aim for roughly 500 words",
            "aim for roughly 2,000 words",
        ),
        (
            "Ending Style",
            "The prompt does not say how it should end.",
            "end on an unresolved note",
            "end with a clear resolution",
        ),
        (
            "Setting Specificity",
            "Real or invented place is unspecified.",
            "invent a fictional coastal town",
            "use a real, named city",
        ),
        (
            "Audience",
            "The target reader is not stated.",
            "write for young adult readers",
            "write for adult literary readers",
        ),
    ],
}

# Extra ambiguities the detector reports beyond the reference annotation.
EXTRAS = {
    "coding": [
        (
            "Logging Verbosity",
            "Whether the function should log progress is unstated.",
            "log at debug level only",
            "emit no logging at all",
        ),
        (
            "Thread Safety",
            "Concurrent callers may or may not be expected.",
            "guard shared state with a lock",
            "document the function as single-threaded",
        ),
        (
            "Python Version Floor",
            "The minimum supported interpreter is unspecified.",
            "target Python 3.10 and newer",
            "stay compatible with Python 3.8",
        ),
        (
            "Dependency Budget",
            "Whether third-party packages are allowed is unclear.",
            "standard library only",
            "allow small utility dependencies",
        ),
    ],
    "data_analysis": [
        (
            "Chart Styling",
            "Visualization defaults are unstated.",
            "use the house plotting style",
            "use library defaults",
        ),
        (
            "File Format",
            "The deliverable format is unspecified.",
            "export results as CSV",
            "export results as parquet",
        ),
        (
            "Column Naming",
            "Output column conventions are unclear.",
            "snake_case all output columns",
            "keep source column names",
        ),
        (
            "Timezone Assumption",
            "Timestamps may be local or UTC.",
            "treat all timestamps as UTC",
            "convert timestamps to store-local time",
        ),
    ],
    "creative_writing": [
        (
            "Title Requirement",
            "Whether the piece needs a title is unstated.",
            "include a short evocative title",
            "deliver the piece untitled",
        ),
        (
            "Dialogue Density",
            "How much dialogue to use is unclear.",
            "lean on dialogue to carry scenes",
            "keep dialogue sparse and interior",
        ),
        (
            "Chapter Breaks",
            "Sectioning is unspecified.",
            "use unmarked scene breaks",
            "number short chapters",
        ),
        (
            "Content Rating",
            "The acceptable intensity is unstated.",
            "keep content suitable for all ages",
            "allow mature themes",
        ),
    ],
}

PROMPTS = {
    "coding": [
        ("dedupe-records", "Write a function that removes duplicate entries from a list of customer records."),
        ("retry-wrapper", "Implement a retry wrapper for flaky network calls."),
        ("log-date-parser", "Write a parser that extracts dates from log lines."),
        ("merge-sorted", "Create a function that merges two sorted arrays."),
        ("batch-rename", "Write a script that renames files in a directory by pattern."),
        ("expiring-cache", "Implement a cache with expiry for API responses."),
        ("email-validator", "Write a function that validates email addresses."),
        ("word-counter", "Create a CLI tool that counts words in text files."),
        ("flatten-dict", "Write a function that flattens a nested dictionary."),
        ("rate-limiter", "Implement a simple rate limiter for outgoing requests."),
        ("chunk-sequence", "Write a function that chunks a sequence into fixed-size blocks."),
        ("timing-decorator", "Create a decorator that times function execution."),
        ("config-diff", "Write a function that diffs two configuration dictionaries."),
        ("priority-queue", "Implement a priority queue with stable ordering."),
        ("whitespace-normalizer", "Write a function that normalizes whitespace in user input."),
        ("api-paginator", "Create a generator that paginates through an API."),
        ("csv-to-dataclass", "Write a function that converts CSV rows into dataclasses."),
        ("backoff-scheduler", "Implement an exponential backoff scheduler."),
        ("cycle-detector", "Write a function that detects cycles in a dependency graph."),
        ("field-masker", "Create a utility that masks sensitive fields in dictionaries."),
        ("rolling-average", "Write a function that computes a rolling average over a stream."),
        ("expression-tokenizer", "Implement a tokenizer for a small expression language."),
        ("txn-grouper", "Write a function that groups transactions by account."),
        ("job-batcher", "Create a scheduler that batches jobs by priority."),
    ],
    "data_analysis": [
        ("monthly-sales", "Analyze monthly sales and report the top products."),
        ("churn-summary", "Summarize customer churn from the subscriptions table."),
        ("growth-regions", "Find the regions with the fastest revenue growth."),
        ("aov-by-channel", "Report average order value by acquisition channel."),
        ("risk-customers", "Identify customers at risk based on activity."),
        ("landing-conversion", "Compare conversion rates across landing pages."),
        ("cohort-retention", "Build a cohort retention view for signups."),
        ("supplier-reliability", "Rank suppliers by delivery reliability."),
        ("discount-effect", "Measure the effect of discounts on repeat purchases."),
        ("session-profile", "Profile session lengths across device types."),
        ("volume-anomalies", "Detect anomalies in daily transaction volume."),
        ("inventory-turnover", "Estimate inventory turnover by warehouse."),
        ("ticket-causes", "Break down support tickets by root cause."),
        ("feature-adoption", "Track feature adoption after the last release."),
        ("ltv-by-segment", "Compute customer lifetime value by segment."),
        ("campaign-efficiency", "Evaluate marketing spend efficiency by campaign."),
        ("refund-patterns", "Summarize refund patterns across product lines."),
        ("weekend-traffic", "Compare weekday and weekend traffic quality."),
        ("purchase-paths", "Identify the most common purchase paths."),
        ("booking-seasonality", "Assess seasonality in bookings data."),
        ("funnel-dropoff", "Report funnel drop-off between checkout steps."),
        ("store-clusters", "Cluster stores by sales profile."),
        ("shipping-reviews", "Quantify the impact of shipping delays on reviews."),
        ("orders-quality", "Audit data quality in the orders pipeline."),
    ],
    "creative_writing": [
        ("lighthouse-keeper", "Write a short story about a lighthouse keeper."),
        ("last-train", "Write a poem about the last train of the night."),
        ("unmapped-street", "Tell a story where a mapmaker discovers an unmapped street."),
        ("seaside-hotel", "Write a scene set in a failing seaside hotel."),
        ("elevator-rivals", "Write a story about two rivals stuck in an elevator."),
        ("explorer-letter", "Compose a letter from an explorer to a child."),
        ("memory-library", "Write a story about a library that lends memories."),
        ("upward-rain", "Describe a city where it rains upward."),
        ("magician-monologue", "Write a monologue for a retired stage magician."),
        ("found-photograph", "Tell the story of a found photograph."),
        ("backward-clock", "Write a fable about a clock that runs backward."),
        ("mars-garden", "Write a story about the first garden on Mars."),
        ("fence-secret", "Write a scene where neighbors share a fence and a secret."),
        ("missing-instrument", "Tell a story about an orchestra missing one instrument."),
        ("word-inventor", "Write a story about a translator who invents words."),
        ("corner-bakery", "Describe the last day of a corner bakery."),
        ("fog-ferry", "Write a story about a ferry that only sails in fog."),
        ("shy-thunderstorm", "Write a children's story about a shy thunderstorm."),
        ("mail-chess", "Tell the story of a chess game played by mail."),
        ("sound-archivist", "Write a story about an archivist of lost sounds."),
        ("diner-blackout", "Write a scene at a 24-hour diner during a blackout."),
        ("lost-color", "Tell a story about a painter losing a color."),
        ("weather-vote", "Write a story about a village that votes on the weather."),
        ("door-museum", "Write a story about a night watchman at a museum of doors."),
        ("frozen-river", "Tell the story of the year the river froze twice."),
    ],
}

# reference-ambiguity counts for the generic records, per domain, in order
GENERIC_COUNTS = {
    "coding": [5] * 11 + [4] * 9,            # 20 records, sum 91
    "data_analysis": [5] * 12 + [4] * 8,     # 20 records, sum 92
    "creative_writing": [5] * 10 + [4] * 11,  # 21 records, sum 94
}

# per-generic-record misses (reference ambiguities the detector fails to find)
MISSES = {
    "coding": [1] * 13 + [0] * 7,
    "data_analysis": [1] * 13 + [0] * 7,
    "creative_writing": [2] * 10 + [2] * 5 + [1] * 6,  # sums 36
}

# per-generic-record extras (detections with no reference counterpart)
EXTRA_COUNTS = {
    "coding": [1] * 17 + [0] * 3,
    "data_analysis": [2] * 6 + [1] * 14,
    "creative_writing": [2] * 1 + [1] * 20,
}

ARTIFACT_KIND = {
    "coding": "code",
    "data_analysis": "analysis",
    "creative_writing": "narrative",
}

# Ratings chosen to hit the target per-question means exactly:
# (count of 5s, rest are 4s) over ten evaluators.
SURVEY_FIVES = {1: 4, 2: 8, 3: 3, 4: 6, 5: 1}


def interpretation_lines(labels_golds: list[tuple[str, str]]) -> str:
    return "\n".join(f"{label}: {gold}" for label, gold in labels_golds)


def disambiguated(prompt: str, labels_golds: list[tuple[str, str]]) -> str:
    if not labels_golds:
        return prompt.rstrip()
    return prompt.rstrip() + "\n\n" + interpretation_lines(labels_golds)


def generic_artifact(domain: str, prompt: str, golds: list[str]) -> str:
    constraints = "\n".join(f"#   - {g}" for g in golds)
    if domain == "coding":
        return (
            f"# {prompt}\n# Interpretations applied:\n{constraints}\n"
            "def solve(data):\n"
            "    result = []\n"
            "    for item in data:\n"
            "        result.append(process(item))\n"
            "    return result\n"
        )
    if domain == "data_analysis":
        return (
            f"-- {prompt}\n-- Interpretations applied:\n"
            + "\n".join(f"--   {g}" for g in golds)
            + "\nSELECT metric, value FROM analysis_result ORDER BY metric;\n"
        )
    lines = "; ".join(golds) if golds else "as written"
    return (
        f"{prompt}\n\nDraft ({lines}): The evening settled in slowly, and "
        "with it the sense that something in the ordinary day had quietly "
        "turned. What follows keeps every choice the reader asked for.\n"
    )


def generic_examples(domain: str) -> list[dict[str, str]]:
    if domain == "creative_writing":
        return [
            {
                "kind": "selected",
                "input_description": "Opening paragraph",
                "expected_behavior": (
                    "Establishes the requested perspective and tone in the "
                    "first three sentences."
                ),
            }
        ]
    return [
        {
            "kind": "selected",
            "input_description": "A well-formed input that meets every stated condition",
            "expected_behavior": "Included in the output unchanged by the filters.",
        },
        {
            "kind": "not_selected",
            "input_description": "An input that violates the primary condition",
            "expected_behavior": "Excluded from the output.",
        },
        {
            "kind": "edge",
            "input_description": "An input exactly on the stated boundary",
            "expected_behavior": (
                "Handled per the chosen interpretation; boundary values are "
                "not silently dropped."
            ),
        },
    ]


def build_generic_record(domain: str, index: int, slug: str, prompt: str,
                         r_count: int, miss: int, extra: int) -> dict:
    """One corpus record plus its fixture payloads."""
    aspects = ASPECTS[domain]
    chosen = [aspects[(index + j) % len(aspects)] for j in range(r_count)]
    refs, golds = [], {}
    for j, (label, desc, phrase_a, phrase_b) in enumerate(chosen):
        aid = f"A{j + 1}"
        refs.append(
            {
                "id": aid,
                "label": label,
                "description": desc,
                "status": "open",
                "resolution": None,
                "depends_on": [],
            }
        )
        golds[aid] = phrase_a if (index + j) % 2 == 0 else phrase_b

    # the detector misses the last `miss` reference ambiguities
    detected = [dict(r) for r in refs[: r_count - miss]]
    extra_bank = EXTRAS[domain]
    extra_ids = []
    for j in range(extra):
        label, desc, _a, _b = extra_bank[(index + j) % len(extra_bank)]
        xid = f"X{j + 1}"
        extra_ids.append(xid)
        detected.append(
            {
                "id": xid,
                "label": label,
                "description": desc,
                "status": "open",
                "resolution": None,
                "depends_on": [],
            }
        )

    questions = []
    for j, amb in enumerate(detected):
        aid = amb["id"]
        if aid in golds:
            label, desc, phrase_a, phrase_b = chosen[int(aid[1:]) - 1]
        else:
            label, desc, phrase_a, phrase_b = extra_bank[
                (index + extra_ids.index(aid)) % len(extra_bank)
            ]
        questions.append(
            {
                "id": f"Q{j + 1}",
                "targets": aid,
                "text": f"How should {label.lower()} be handled?",
                "options": [
                    {"id": "A", "text": phrase_a.capitalize() + ".", "resolves_to": phrase_a},
                    {"id": "B", "text": phrase_b.capitalize() + ".", "resolves_to": phrase_b},
                ],
            }
        )

    record = {
        "id": slug,
        "domain": domain,
        "prompt_text": prompt,
        "reference_ambiguities": refs,
        "gold_resolutions": golds,
        "disambiguated_prompt": disambiguated(
            prompt, [(r["label"], golds[r["id"]]) for r in refs]
        ),
        "notes": None,
    }
    gold_values = [golds[r["id"]] for r in refs]
    fixtures = {
        f"detect:{slug}": {"ambiguities": detected},
        f"plan:{slug}": {"questions": questions},
        f"solve:{slug}": {
            "artifact": generic_artifact(domain, prompt, gold_values),
            "artifact_kind": ARTIFACT_KIND[domain],
            "examples": generic_examples(domain),
        },
    }
    fixtures.update(oneshot_fixtures(slug, prompt, gold_values, rounds=2 + index % 3))
    counts = (r_count - miss, len(detected), r_count)
    return {"record": record, "fixtures": fixtures, "counts": counts}


def oneshot_fixtures(slug: str, prompt: str, golds: list[str], rounds: int) -> dict:
    """Baseline replies that only satisfy every gold on the final round."""
    out = {}
    for n in range(1, rounds + 1):
        if n < rounds:
            included = golds[: max(0, min(n - 1, len(golds) - 1))]
        else:
            included = golds
        body = f"Here is attempt {n} for: {prompt}\n"
        if included:
            body += "Covered so far:\n" + "\n".join(f"- {g}" for g in included) + "\n"
        body += "(generated without asking any clarification questions)"
        out[f"oneshot:{slug}:{n}"] = body
    return out


def chain_record(domain: str, slug: str, prompt: str, a1: tuple, a2: tuple,
                 keep: bool) -> dict:
    """Two ambiguities where the second exists only under A1's option A.

    keep=True picks the A branch (second ambiguity survives and is resolved);
    keep=False picks B (second is transitively eliminated, never asked).
    """
    (l1, d1, p1a, p1b) = a1
    (l2, d2, p2a, p2b) = a2
    refs = [
        {"id": "A1", "label": l1, "description": d1, "status": "open",
         "resolution": None, "depends_on": []},
        {"id": "A2", "label": l2, "description": d2, "status": "open",
         "resolution": None, "depends_on": [["A1", "A"]]},
    ]
    golds = {"A1": p1a if keep else p1b}
    labels_golds = [(l1, golds["A1"])]
    if keep:
        golds["A2"] = p2a
        labels_golds.append((l2, p2a))
    questions = [
        {
            "id": "Q1",
            "targets": "A1",
            "text": f"How should {l1.lower()} be handled?",
            "options": [
                {"id": "A", "text": p1a.capitalize() + ".", "resolves_to": p1a},
                {"id": "B", "text": p1b.capitalize() + ".", "resolves_to": p1b},
            ],
        },
        {
            "id": "Q2",
            "targets": "A2",
            "text": f"How should {l2.lower()} be handled?",
            "options": [
                {"id": "A", "text": p2a.capitalize() + ".", "resolves_to": p2a},
                {"id": "B", "text": p2b.capitalize() + ".", "resolves_to": p2b},
            ],
        },
    ]
    record = {
        "id": slug,
        "domain": domain,
        "prompt_text": prompt,
        "reference_ambiguities": refs,
        "gold_resolutions": golds,
        "disambiguated_prompt": disambiguated(prompt, labels_golds),
        "notes": "The second ambiguity only exists under option A of the first.",
    }
    gold_values = [golds[k] for k in sorted(golds)]
    fixtures = {
        f"detect:{slug}": {"ambiguities": [dict(r) for r in refs]},
        f"plan:{slug}": {"questions": questions},
        f"solve:{slug}": {
            "artifact": generic_artifact(domain, prompt, gold_values),
            "artifact_kind": ARTIFACT_KIND[domain],
            "examples": generic_examples(domain),
        },
    }
    fixtures.update(oneshot_fixtures(slug, prompt, gold_values, rounds=3))
    n = len(refs)
    return {"record": record, "fixtures": fixtures, "counts": (n, n, n)}


def guard_record(domain: str, slug: str, prompt: str, label: str, desc: str,
                 coarse_a: str, coarse_b: str, precise: str,
                 free_form: str, active: bool) -> dict:
    """One ambiguity served by a coarse question plus a guarded refinement.

    active=True: gold is the refinement's default, so the follow-up runs.
    active=False: the follow-up guards on option B while gold picks A, so it
    is skipped and the coarse answer resolves the ambiguity.
    """
    gold = precise if active else coarse_a
    guard_on = "A" if active else "B"
    refs = [
        {"id": "A1", "label": label, "description": desc, "status": "open",
         "resolution": None, "depends_on": []},
    ]
    questions = [
        {
            "id": "Q1",
            "targets": "A1",
            "text": f"How should {label.lower()} be handled?",
            "options": [
                {"id": "A", "text": coarse_a.capitalize() + ".", "resolves_to": coarse_a},
                {"id": "B", "text": coarse_b.capitalize() + ".", "resolves_to": coarse_b},
            ],
        },
        {
            "id": "Q2",
            "targets": "A1",
            "text": "Do you want to pin down the exact value?",
            "guard": [["Q1", guard_on]],
            "allows_free_text": True,
            "options": [
                {"id": "A", "text": "Yes, let me type it.", "resolves_to": free_form},
                {"id": "B", "text": "No, use the default.", "resolves_to": precise},
            ],
        },
    ]
    record = {
        "id": slug,
        "domain": domain,
        "prompt_text": prompt,
        "reference_ambiguities": refs,
        "gold_resolutions": {"A1": gold},
        "disambiguated_prompt": disambiguated(prompt, [(label, gold)]),
        "notes": None,
    }
    fixtures = {
        f"detect:{slug}": {"ambiguities": [dict(r) for r in refs]},
        f"plan:{slug}": {"questions": questions},
        f"solve:{slug}": {
            "artifact": generic_artifact(domain, prompt, [gold]),
            "artifact_kind": ARTIFACT_KIND[domain],
            "examples": generic_examples(domain),
        },
    }
    fixtures.update(oneshot_fixtures(slug, prompt, [gold], rounds=2))
    return {"record": record, "fixtures": fixtures, "counts": (1, 1, 1)}


def case_study_sql() -> dict:
    refs = [
        {**a, "status": "open", "resolution": None, "depends_on": []}
        for a in SQL_AMBIGUITIES
    ]
    record = {
        "id": "sql-orders",
        "domain": "data_analysis",
        "prompt_text": SQL_PROMPT,
        "reference_ambiguities": refs,
        "gold_resolutions": dict(SQL_GOLD),
        "disambiguated_prompt": disambiguated(
            SQL_PROMPT, [(r["label"], SQL_GOLD[r["id"]]) for r in refs]
        ),
        "notes": SQL_NOTES,
    }
    fixtures = {
        "detect:sql-orders": {"ambiguities": [dict(a) for a in SQL_AMBIGUITIES]},
        "plan:sql-orders": SQL_PLAN,
        "solve:sql-orders": {
            "artifact": SQL_QUERY,
            "artifact_kind": "sql",
            "examples": SQL_EXAMPLES,
        },
        "revise:sql-orders": {
            "artifact": SQL_QUERY.replace(
                "SELECT o.order_id, o.order_date, c.customer_id, c.total_spent",
                "SELECT o.order_id, o.order_date, c.customer_id, c.name, c.total_spent",
            ),
            "artifact_kind": "sql",
            "examples": SQL_EXAMPLES,
        },
    }
    fixtures.update(
        oneshot_fixtures("sql-orders", SQL_PROMPT, list(SQL_GOLD.values()), rounds=3)
    )
    return {"record": record, "fixtures": fixtures, "counts": (2, 2, 2)}


def case_study_temperature() -> dict:
    refs = [
        {**a, "status": "open", "resolution": None, "depends_on": []}
        for a in TEMP_AMBIGUITIES
    ]
    record = {
        "id": "temperature",
        "domain": "coding",
        "prompt_text": TEMP_PROMPT,
        "reference_ambiguities": refs,
        "gold_resolutions": dict(TEMP_GOLD),
        "disambiguated_prompt": disambiguated(
            TEMP_PROMPT, [(r["label"], TEMP_GOLD[r["id"]]) for r in refs]
        ),
        "notes": TEMP_NOTES,
    }
    fixtures = {
        "detect:temperature": {"ambiguities": [dict(a) for a in TEMP_AMBIGUITIES]},
        "plan:temperature": TEMP_PLAN,
        "solve:temperature": {
            "artifact": TEMP_FUNCTION,
            "artifact_kind": "code",
            "examples": TEMP_EXAMPLES,
        },
        "revise:temperature": {
            "artifact": TEMP_FUNCTION.replace(
                "    return sum(filtered) / len(filtered)",
                "    return round(sum(filtered) / len(filtered), 2)",
            ),
            "artifact_kind": "code",
            "examples": TEMP_EXAMPLES,
        },
    }
    fixtures.update(
        oneshot_fixtures("temperature", TEMP_PROMPT, list(TEMP_GOLD.values()), rounds=4)
    )
    return {"record": record, "fixtures": fixtures, "counts": (3, 3, 3)}


SPECIALS = {
    "coding": [
        case_study_temperature,
        lambda: chain_record(
            "coding", "spreadsheet-import",
            "Write a function that imports records from uploaded spreadsheets.",
            ("Header Row Presence", "Whether the first row is data or headers.",
             "treat the first row as headers", "treat every row as data"),
            ("Header Normalization", "How header names should be cleaned up.",
             "lowercase and snake_case the header names",
             "keep header names verbatim"),
            keep=False,
        ),
        lambda: chain_record(
            "coding", "log-archiver",
            "Write a function that archives old log files.",
            ("Archive Trigger", "What makes a file old enough to archive.",
             "archive files older than 30 days",
             "archive when the directory exceeds 1 GB"),
            ("Age Basis", "Which timestamp the age is measured from.",
             "age measured from last modification time",
             "age measured from creation time"),
            keep=True,
        ),
        lambda: guard_record(
            "coding", "string-truncation",
            "Write a function that truncates long strings for display.",
            "Truncation Rule", "When and how strings should be shortened.",
            "truncate by a configurable character limit",
            "never truncate, wrap instead",
            "truncation limit: 80 characters (default)",
            "truncation limit: {free_text} characters",
            active=True,
        ),
        lambda: guard_record(
            "coding", "title-slugs",
            "Write a function that slugifies titles for URLs.",
            "Unicode Handling", "What happens to non-ASCII characters.",
            "transliterate accented characters to ASCII",
            "strip non-ASCII characters entirely",
            "replace non-ASCII with a placeholder (default)",
            "replace non-ASCII with {free_text}",
            active=False,
        ),
    ],
    "data_analysis": [
        case_study_sql,
        lambda: chain_record(
            "data_analysis", "weekly-actives",
            "Report weekly active users for the dashboard.",
            ("Activity Definition", "What counts as user activity.",
             "count any authenticated request as activity",
             "count only core feature usage as activity"),
            ("Request Source Filter", "Which request sources count.",
             "exclude health-check and bot requests",
             "include all request sources"),
            keep=False,
        ),
        lambda: chain_record(
            "data_analysis", "redesign-baskets",
            "Compare basket sizes before and after the redesign.",
            ("Comparison Window", "How long before and after to compare.",
             "compare four weeks before and after launch",
             "compare the full quarters around launch"),
            ("Launch Week Handling", "Whether launch week itself counts.",
             "exclude the launch week itself",
             "include the launch week in the after period"),
            keep=True,
        ),
        lambda: guard_record(
            "data_analysis", "large-transactions",
            "Flag unusually large transactions for review.",
            "Large Transaction Rule", "What makes a transaction large.",
            "flag transactions above a configurable amount",
            "flag by percentile within each account",
            "flag transactions above $10,000 (default)",
            "flag transactions above ${free_text}",
            active=True,
        ),
        lambda: guard_record(
            "data_analysis", "survey-feedback",
            "Summarize survey free-text answers.",
            "Language Scope", "Which languages the summary covers.",
            "summarize English responses only",
            "summarize all languages with translation",
            "summarize English responses only (reviewed default)",
            "summarize responses in {free_text}",
            active=False,
        ),
    ],
    "creative_writing": [
        lambda: chain_record(
            "creative_writing", "diary-entries",
            "Write a story told through diary entries.",
            ("Diarist Identity", "Whose diary the reader is reading.",
             "the diarist is the ship's captain",
             "the diarist is a stowaway"),
            ("Command Log Style", "How official the entries should read.",
             "entries use terse official log style",
             "entries drift into personal confession"),
            keep=False,
        ),
        lambda: chain_record(
            "creative_writing", "school-ghost",
            "Write a ghost story set in a school.",
            ("Ghost Visibility", "Who can perceive the ghost.",
             "only the caretaker can see the ghost",
             "every student can see the ghost"),
            ("Caretaker Backstory", "How the caretaker relates to the ghost.",
             "the caretaker knew the ghost in life",
             "the caretaker is a newcomer"),
            keep=True,
        ),
        lambda: guard_record(
            "creative_writing", "midnight-knock",
            "Write a story that begins with a knock at midnight.",
            "Knocker Identity", "Who is at the door.",
            "the knocker is a specific named figure",
            "the knocker stays unseen and unknown",
            "the knocker is Mara, the narrator's missing sister (default)",
            "the knocker is {free_text}",
            active=True,
        ),
        lambda: guard_record(
            "creative_writing", "house-memory",
            "Write a story about a house that remembers.",
            "Memory Mechanism", "How the house shows what it remembers.",
            "the house replays scenes in reflections",
            "the house rearranges its rooms",
            "the house replays scenes in reflections (vivid default)",
            "the house remembers via {free_text}",
            active=False,
        ),
    ],
}


def build_domain(domain: str) -> tuple[list[dict], dict, tuple[int, int, int]]:
    records, fixtures = [], {}
    pooled = [0, 0, 0]
    for build in SPECIALS[domain]:
        built = build()
        records.append(built["record"])
        fixtures.update(built["fixtures"])
        pooled = [p + c for p, c in zip(pooled, built["counts"])]

    counts = GENERIC_COUNTS[domain]
    misses = MISSES[domain]
    extras = EXTRA_COUNTS[domain]
    prompts = PROMPTS[domain]
    special_count = len(SPECIALS[domain])
    needed = 25 - special_count
    assert len(counts) == len(misses) == len(extras) == needed, domain
    assert len(prompts) >= needed, domain
    for i in range(needed):
        slug, prompt = prompts[i]
        built = build_generic_record(
            domain, i, slug, prompt, counts[i], misses[i], extras[i]
        )
        records.append(built["record"])
        fixtures.update(built["fixtures"])
        pooled = [p + c for p, c in zip(pooled, built["counts"])]
    return records, fixtures, tuple(pooled)


def special_fixtures() -> dict:
    """Fixtures outside the corpus: the zero-ambiguity demo prompt."""
    return {
        "detect:fully-specified": {"ambiguities": []},
        "solve:fully-specified": {
            "artifact": (
                "def add(a: int, b: int) -> int:\n    return a + b\n"
            ),
            "artifact_kind": "code",
            "examples": [
                {"kind": "selected", "input_description": "add(2, 3)",
                 "expected_behavior": "returns 5"},
                {"kind": "not_selected", "input_description": "add('2', 3)",
                 "expected_behavior": "out of contract; typing rejects it"},
                {"kind": "edge", "input_description": "add(0, 0)",
                 "expected_behavior": "returns 0"},
            ],
        },
    }


def main() -> int:
    DATA_DIR.mkdir(parents=True, exist_ok=True)
    all_records: list[dict] = []
    fixtures: dict[str, str] = {}
    for domain, target in POOLED_TARGETS.items():
        records, raw_fixtures, pooled = build_domain(domain)
        assert pooled == target, f"{domain}: pooled {pooled} != target {target}"
        assert len(records) == 25, f"{domain}: {len(records)} records"
        for rec in records:
            n = len(rec["reference_ambiguities"])
            assert 1 <= n <= 5, f"{rec['id']}: {n} reference ambiguities"
        all_records.extend(records)
        for key, payload in raw_fixtures.items():
            fixtures[key] = (
                payload if isinstance(payload, str) else json.dumps(payload, indent=1)
            )
    for key, payload in special_fixtures().items():
        fixtures[key] = json.dumps(payload, indent=1)

    ids = [r["id"] for r in all_records]
    assert len(set(ids)) == len(ids), "duplicate record ids"
    for key in fixtures:
        assert isinstance(fixtures[key], str)

    # detection fixtures must survive label dedup and the detector cap
    for rec in all_records:
        detected = json.loads(fixtures[f"detect:{rec['id']}"])["ambiguities"]
        labels = [a["label"].lower() for a in detected]
        assert len(set(labels)) == len(labels), f"{rec['id']}: dup detect labels"
        assert len(detected) <= 8, f"{rec['id']}: {len(detected)} detections"
        assert len(detected) >= 1, f"{rec['id']}: empty detection"

    manifest = {"coding": 25, "data_analysis": 25, "creative_writing": 25}
    corpus_path = DATA_DIR / "corpus.jsonl"
    with open(corpus_path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"manifest": manifest}) + "\n")
        for rec in all_records:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")

    fixtures_path = DATA_DIR / "mock_fixtures.json"
    fixtures_path.write_text(
        json.dumps(fixtures, indent=1, ensure_ascii=False, sort_keys=True) + "\n",
        encoding="utf-8",
    )

    survey_path = DATA_DIR / "survey_sample.csv"
    rows = ["question_index,rating"]
    for q, fives in SURVEY_FIVES.items():
        rows += [f"{q},5"] * fives + [f"{q},4"] * (10 - fives)
    survey_path.write_text("\n".join(rows) + "\n", encoding="utf-8")

    print(f"wrote {corpus_path} ({len(all_records)} records)")
    print(f"wrote {fixtures_path} ({len(fixtures)} fixtures)")
    print(f"wrote {survey_path}")
    return verify(corpus_path, fixtures_path)


def verify(corpus_path: Path, fixtures_path: Path) -> int:
    """Round-trip the generated files through the real pipeline."""
    from clarify.evaluation import AlignmentMode, run_detect_eval, run_full_eval
    from clarify.gateway import ProviderConfig
    from clarify.store import load_dataset

    dataset = load_dataset(corpus_path)
    cfg = ProviderConfig.mock(str(fixtures_path))
    report = run_detect_eval(dataset, cfg, AlignmentMode.EXACT_LABEL)
    assert not report["errors"], report["errors"]
    expected = {
        "coding": {"precision": 0.84, "recall": 0.87, "f1": 0.85},
        "data_analysis": {"precision": 0.77, "recall": 0.87, "f1": 0.82},
        "creative_writing": {"precision": 0.74, "recall": 0.64, "f1": 0.69},
    }
    assert report["rows"] == expected, report["rows"]
    print("detect eval reproduces the expected identification table")

    full = run_full_eval(dataset, cfg)
    assert not full["errors"], full["errors"][:3]
    assert len(full["sessions"]) == 75
    print("full eval completes all 75 sessions")
    return 0


if __name__ == "__main__":
    sys.exit(main())
