//! Word pools for the synthetic taxonomy. Pools are token-disjoint so that
//! industry, sub-domain and functional tags never share vocabulary.

/// 14 qualifiers x 11 domains = 154 industries.
pub const QUALIFIERS: &[&str] = &[
    "marine",
    "urban",
    "rural",
    "digital",
    "industrial",
    "clinical",
    "retail",
    "municipal",
    "aerospace",
    "agricultural",
    "consumer",
    "renewable",
    "wholesale",
    "coastal",
];

pub const DOMAINS: &[&str] = &[
    "insurance",
    "logistics",
    "banking",
    "energy",
    "healthcare",
    "education",
    "manufacturing",
    "construction",
    "media",
    "telecom",
    "hospitality",
];

pub const SUBDOMAIN_TERMS: &[&str] = &[
    "claims",
    "underwriting",
    "payroll",
    "procurement",
    "scheduling",
    "compliance",
    "auditing",
    "forecasting",
    "inventory",
    "billing",
    "recruiting",
    "training",
    "maintenance",
    "dispatch",
    "pricing",
    "marketing",
    "treasury",
    "lending",
    "custody",
    "settlement",
    "sourcing",
    "warehousing",
    "fleet",
    "routing",
    "ticketing",
    "reservations",
    "catering",
    "housekeeping",
    "admissions",
    "curriculum",
    "grading",
    "enrollment",
    "research",
    "publishing",
    "advertising",
    "broadcasting",
    "licensing",
    "permitting",
    "inspection",
    "safety",
    "quality",
    "packaging",
    "assembly",
    "fabrication",
    "welding",
    "surveying",
    "zoning",
    "leasing",
    "tenancy",
    "metering",
    "outages",
    "grid",
    "storage",
    "emissions",
    "recycling",
    "waste",
    "water",
    "irrigation",
    "harvest",
    "livestock",
    "greenhouse",
    "pharmacy",
    "radiology",
    "nursing",
    "telehealth",
    "diagnostics",
    "reimbursement",
    "onboarding",
    "benefits",
    "retention",
    "wellness",
    "loyalty",
    "merchandising",
    "checkout",
    "returns",
    "fulfillment",
    "customs",
    "freight",
    "tariffs",
    "brokerage",
    "trading",
    "hedging",
    "valuation",
    "reporting",
    "budgeting",
    "invoicing",
    "collections",
    "fraud",
    "identity",
    "privacy",
    "cybersecurity",
    "backup",
    "networking",
    "provisioning",
    "roaming",
    "spectrum",
    "towers",
    "subscriptions",
    "churn",
    "helpdesk",
    "feedback",
    "surveys",
    "events",
    "sponsorship",
    "talent",
    "staffing",
    "litigation",
    "patents",
    "governance",
    "sustainability",
    "carbon",
    "tooling",
    "calibration",
    "robotics",
    "drones",
    "navigation",
    "mapping",
    "satellites",
    "propulsion",
    "avionics",
    "docking",
    "ports",
    "cargo",
    "translation",
    "localization",
    "accessibility",
    "payments",
];

/// Functional tags are `"{object} {action}"`.
pub const OBJECTS: &[&str] = &[
    "invoice",
    "receipt",
    "timesheet",
    "manifest",
    "itinerary",
    "prescription",
    "transcript",
    "warranty",
    "mortgage",
    "premium",
    "dividend",
    "coupon",
    "voucher",
    "shift",
    "roster",
    "ballot",
    "blueprint",
    "floorplan",
    "meter",
    "turbine",
    "battery",
    "vendor",
    "supplier",
    "applicant",
    "patient",
    "student",
    "guest",
    "passenger",
    "driver",
    "vehicle",
    "parcel",
    "pallet",
    "container",
    "document",
    "email",
    "chatlog",
    "voicemail",
    "video",
    "podcast",
    "article",
    "headline",
    "image",
    "review",
    "complaint",
    "refund",
    "quote",
    "order",
    "catalog",
    "barcode",
    "contract",
    "policy",
    "credential",
    "certificate",
    "incident",
    "asset",
    "sensor",
    "firmware",
    "dataset",
    "spreadsheet",
    "ledger",
];

pub const ACTIONS: &[&str] = &[
    "reconciliation",
    "extraction",
    "validation",
    "deduplication",
    "summarization",
    "classification",
    "scoring",
    "ranking",
    "matching",
    "tracking",
    "monitoring",
    "optimization",
    "simulation",
    "annotation",
    "redaction",
    "benchmarking",
    "allocation",
    "estimation",
    "detection",
    "segmentation",
    "attribution",
    "orchestration",
    "normalization",
    "enrichment",
    "archiving",
    "alerting",
    "drafting",
    "verification",
    "prioritization",
    "tagging",
];

/// Agent-level differentiators; one appears in each description.
pub const FEATURES: &[&str] = &[
    "multilingual",
    "realtime",
    "explainable",
    "offline",
    "auditable",
    "streaming",
    "mobile",
    "encrypted",
    "lightweight",
    "federated",
    "serverless",
    "probabilistic",
    "incremental",
    "interactive",
    "headless",
    "sandboxed",
];

pub const NAME_SUFFIXES: &[&str] = &[
    "Pilot",
    "Studio",
    "Desk",
    "Copilot",
    "Engine",
    "Navigator",
    "Works",
    "Hub",
    "Sentinel",
    "Forge",
    "Relay",
    "Beacon",
];

pub const DETAILS: &[&str] = &[
    "regional",
    "archived",
    "partner",
    "overdue",
    "flagged",
    "imported",
    "pending",
    "escalated",
    "unmatched",
    "seasonal",
];

/// Named in-house systems that usage examples operate on.
pub const SYSTEMS: &[&str] = &[
    "atlas", "orion", "quasar", "helix", "nimbus", "vertex", "zephyr", "cobalt", "sierra", "lumen", "tundra", "mosaic",
    "kestrel", "juniper", "obsidian", "pinnacle",
];

pub const PERIODS: &[&str] = &["quarter", "month", "week", "year", "season", "sprint"];

pub const VERBS: &[&str] = &["automate", "handle", "speed up", "take over", "streamline", "run"];

pub const PAIN_ADJECTIVES: &[&str] = &["slow", "messy", "manual", "error-prone", "delayed", "inconsistent", "costly"];

pub const PAIN_NOUNS: &[&str] = &["backlogs", "handoffs", "bottlenecks", "rework", "escalations", "gaps"];

/// Filler sentences that pad descriptions to length. `{f}` is the agent's
/// feature word, `{s}` a sub-domain tag and `{i}` the industry tag.
pub const FILLERS: &[&str] = &[
    "Every recommendation is logged so reviewers can trace how each decision was reached.",
    "It plugs into existing {s} systems through documented connectors and plain file exports.",
    "Operators configure thresholds once and the agent keeps applying them consistently.",
    "The {f} architecture keeps latency low even when workloads spike unexpectedly.",
    "Typical users are analysts and coordinators inside {i} organizations of every size.",
    "Results arrive as structured summaries that downstream systems can consume directly.",
    "Built-in safeguards escalate ambiguous cases to a human specialist before acting.",
    "A short setup wizard maps local conventions before the first production run.",
    "Usage reports highlight recurring issues so teams can fix root causes early.",
    "Its {f} mode was designed with input from practitioners working in {s}.",
];

/// Usage-example templates; each example exercises one functional tag
/// (`{o}` object, `{a}` action) on a named system `{y}` with a detail word
/// `{d}`, a period `{p}` and one of the agent's sub-domain tags `{s}`.
pub const EXAMPLE_TEMPLATES: &[&str] = &[
    "Kick off {o} {a} in {y} on the {d} batch we received last {p}",
    "Can you do {o} {a} for these {d} {s} files in {y} before Friday",
    "Set up {o} {a} alerts whenever {d} items land in the {y} {s} queue",
    "Walk me through {o} {a} results from the {d} {s} export in {y}",
    "Schedule nightly {o} {a} across every {d} {y} record from this {p}",
    "Compare this {p}'s {o} {a} output in {y} against the {d} baseline",
    "Draft a summary of {o} {a} exceptions raised in {d} {s} data from {y}",
    "Start {o} {a} for our {d} {s} pipeline on {y}",
];
