//! Mock code generators standing in for the coding LLM.

use rand::seq::IndexedRandom;
use rand::Rng;

use super::{CodeGenerator, GenContext, Generated, PolicyAction, SimRng};

/// One canned generator output.
#[derive(Debug, Clone, PartialEq)]
pub struct FixtureEntry {
    pub plan: String,
    pub code: String,
    pub exec_output: String,
    pub metric: Option<f64>,
    pub exec_time: f64,
}

impl FixtureEntry {
    fn to_generated(&self) -> Generated {
        Generated {
            plan: self.plan.clone(),
            code: self.code.clone(),
            exec_output: self.exec_output.clone(),
            metric: self.metric,
            exec_time: self.exec_time,
            analysis_report: match self.metric {
                Some(m) => format!("The script ran and reported a validation score of {m:.4}."),
                None => "The script failed; see the execution output.".into(),
            },
        }
    }
}

/// Table-driven generator: each action draws uniformly from its own table.
#[derive(Debug, Clone)]
pub struct FixtureGenerator {
    pub drafts: Vec<FixtureEntry>,
    pub fixes: Vec<FixtureEntry>,
    pub improvements: Vec<FixtureEntry>,
}

impl FixtureGenerator {
    pub fn new(drafts: Vec<FixtureEntry>, fixes: Vec<FixtureEntry>, improvements: Vec<FixtureEntry>) -> Self {
        FixtureGenerator {
            drafts,
            fixes,
            improvements,
        }
    }
}

impl CodeGenerator for FixtureGenerator {
    fn generate(&mut self, ctx: &GenContext<'_>, rng: &mut SimRng) -> Result<Generated, String> {
        let table = match ctx.action {
            PolicyAction::Draft => &self.drafts,
            PolicyAction::Debug(_) => &self.fixes,
            PolicyAction::Improve(_) => &self.improvements,
            PolicyAction::Terminate => return Err("asked to generate for Terminate".into()),
        };
        table
            .choose(rng)
            .map(FixtureEntry::to_generated)
            .ok_or_else(|| format!("fixture table for {:?} is empty", ctx.action))
    }
}

struct Model {
    import: &'static str,
    ctor: &'static str,
    /// Whether the package is installed in the (mock) execution environment.
    available: bool,
}

const MODELS: &[Model] = &[
    Model {
        import: "from sklearn.ensemble import RandomForestRegressor",
        ctor: "RandomForestRegressor",
        available: true,
    },
    Model {
        import: "from sklearn.ensemble import GradientBoostingRegressor",
        ctor: "GradientBoostingRegressor",
        available: true,
    },
    Model {
        import: "from sklearn.linear_model import Ridge",
        ctor: "Ridge",
        available: true,
    },
    Model {
        import: "from xgboost import XGBRegressor",
        ctor: "XGBRegressor",
        available: false,
    },
    Model {
        import: "from lightgbm import LGBMRegressor",
        ctor: "LGBMRegressor",
        available: false,
    },
];

const KWARGS: &[(&str, &[&str])] = &[
    ("n_estimators", &["100", "200", "500"]),
    ("max_depth", &["3", "5", "None"]),
    ("learning_rate", &["0.05", "0.1"]),
    ("alpha", &["0.5", "1.0"]),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Bug {
    MissingColumn,
    NanInput,
    Typo,
}

#[derive(Debug, Clone, PartialEq)]
struct Program {
    model: usize,
    kwargs: Vec<(usize, usize)>,
    log_target: bool,
    feature_fn: bool,
    bug: Option<Bug>,
}

impl Program {
    fn render(&self) -> String {
        let m = &MODELS[self.model];
        let mut out = String::new();
        out.push_str("import numpy as np\nimport pandas as pd\n");
        out.push_str(m.import);
        out.push('\n');
        out.push_str("from sklearn.model_selection import train_test_split\n");
        out.push_str("from sklearn.metrics import mean_squared_error\n\n");
        out.push_str("train = pd.read_csv('./input/train.csv')\n");
        if self.feature_fn {
            out.push_str(
                "\n\ndef add_features(df):\n    df = df.copy()\n    df['TotalSF'] = df['TotalBsmtSF'] + df['1stFlrSF'] + df['2ndFlrSF']\n    return df\n\n\ntrain = add_features(train)\n",
            );
        }
        let target = if self.bug == Some(Bug::MissingColumn) {
            "Saleprice"
        } else {
            "SalePrice"
        };
        let fill = if self.bug == Some(Bug::NanInput) { "" } else { ".fillna(0)" };
        out.push_str(&format!(
            "X = train.drop(['{target}'], axis=1).select_dtypes(include=[np.number]){fill}\n"
        ));
        if self.log_target {
            out.push_str(&format!("y = np.log1p(train['{target}'])\n"));
        } else {
            out.push_str(&format!("y = train['{target}']\n"));
        }
        out.push_str("X_train, X_val, y_train, y_val = train_test_split(X, y, test_size=0.2, random_state=42)\n");
        let args: Vec<String> = self
            .kwargs
            .iter()
            .map(|&(k, v)| format!("{}={}", KWARGS[k].0, KWARGS[k].1[v]))
            .collect();
        out.push_str(&format!("model = {}({})\n", m.ctor, args.join(", ")));
        out.push_str("model.fit(X_train, y_train)\n");
        let predict = if self.bug == Some(Bug::Typo) { "predcit" } else { "predict" };
        out.push_str(&format!("preds = model.{predict}(X_val)\n"));
        out.push_str("rmse = np.sqrt(mean_squared_error(y_val, preds))\n");
        out.push_str("print(f'Validation RMSE: {rmse:.4f}')\n");
        out
    }

    /// The execution error, if the program fails.
    fn failure(&self) -> Option<String> {
        let m = &MODELS[self.model];
        if !m.available {
            let pkg = m.import.split_whitespace().nth(1).unwrap_or("");
            return Some(format!(
                "Traceback (most recent call last):\n  File \"/workspace/runfile.py\", line 3, in <module>\n    {}\nModuleNotFoundError: No module named '{pkg}'",
                m.import
            ));
        }
        let line = 8 + if self.feature_fn { 9 } else { 0 };
        self.bug.map(|bug| {
            let (err, at) = match bug {
                Bug::MissingColumn => ("KeyError: \"['Saleprice'] not found in axis\"", line),
                Bug::NanInput => ("ValueError: Input X contains NaN.", line + 4),
                Bug::Typo => (
                    "AttributeError: 'Model' object has no attribute 'predcit'",
                    line + 5,
                ),
            };
            format!(
                "Traceback (most recent call last):\n  File \"/workspace/runfile.py\", line {at}, in <module>\n{err}"
            )
        })
    }
}

/// Generates random, syntactically valid regression scripts. Scripts that
/// import an unavailable package, or carry a planted bug, fail.
#[derive(Debug, Clone)]
pub struct GrammarGenerator {
    /// Chance that a fresh draft or a failed fix attempt carries a bug.
    pub p_bug: f64,
    /// Chance that a debug step fixes its parent's problem.
    pub p_fix: f64,
    programs: Vec<Program>,
}

impl Default for GrammarGenerator {
    fn default() -> Self {
        GrammarGenerator {
            p_bug: 0.3,
            p_fix: 0.7,
            programs: Vec::new(),
        }
    }
}

impl GrammarGenerator {
    fn random_bug(&self, rng: &mut SimRng) -> Option<Bug> {
        if rng.random::<f64>() < self.p_bug {
            Some(*[Bug::MissingColumn, Bug::NanInput, Bug::Typo].choose(rng).expect("non-empty"))
        } else {
            None
        }
    }

    fn random_kwargs(rng: &mut SimRng) -> Vec<(usize, usize)> {
        let mut kwargs = Vec::new();
        for (k, (_, values)) in KWARGS.iter().enumerate() {
            if rng.random::<f64>() < 0.5 {
                kwargs.push((k, rng.random_range(0..values.len())));
            }
        }
        // keyword order is arbitrary; shuffling it exercises normalization
        for i in (1..kwargs.len()).rev() {
            let j = rng.random_range(0..=i);
            kwargs.swap(i, j);
        }
        kwargs
    }

    fn draft(&self, rng: &mut SimRng) -> Program {
        Program {
            model: rng.random_range(0..MODELS.len()),
            kwargs: Self::random_kwargs(rng),
            log_target: rng.random::<f64>() < 0.5,
            feature_fn: rng.random::<f64>() < 0.3,
            bug: self.random_bug(rng),
        }
    }

    fn debug(&self, parent: &Program, rng: &mut SimRng) -> Program {
        let mut p = parent.clone();
        if rng.random::<f64>() < self.p_fix {
            if !MODELS[p.model].available {
                let available: Vec<usize> = (0..MODELS.len()).filter(|&i| MODELS[i].available).collect();
                p.model = *available.choose(rng).expect("some model is available");
            }
            p.bug = None;
        } else {
            p.bug = self.random_bug(rng).or(p.bug);
        }
        p
    }

    fn improve(&self, parent: &Program, rng: &mut SimRng) -> Program {
        let mut p = parent.clone();
        match rng.random_range(0..3) {
            0 => p.kwargs = Self::random_kwargs(rng),
            1 => p.feature_fn = !p.feature_fn,
            _ => p.log_target = !p.log_target,
        }
        if rng.random::<f64>() < self.p_bug / 2.0 {
            p.bug = self.random_bug(rng);
        }
        p
    }
}

impl CodeGenerator for GrammarGenerator {
    fn generate(&mut self, ctx: &GenContext<'_>, rng: &mut SimRng) -> Result<Generated, String> {
        if ctx.step == 0 {
            self.programs.clear();
        }
        if self.programs.len() != ctx.step {
            return Err(format!(
                "generator state has {} programs at step {}",
                self.programs.len(),
                ctx.step
            ));
        }
        let parent = |id: usize| self.programs.get(id).ok_or(format!("unknown target node {id}"));
        let (program, plan) = match ctx.action {
            PolicyAction::Draft => (self.draft(rng), "Train a regressor on the numeric features.".to_string()),
            PolicyAction::Debug(t) => (
                self.debug(parent(t)?, rng),
                format!("Fix the error raised by node {t}."),
            ),
            PolicyAction::Improve(t) => (
                self.improve(parent(t)?, rng),
                format!("Tune the model of node {t} to lower validation error."),
            ),
            PolicyAction::Terminate => return Err("asked to generate for Terminate".into()),
        };
        let code = program.render();
        let failure = program.failure();
        let exec_time = rng.random_range(2.0..60.0);
        let metric = if failure.is_some() {
            None
        } else {
            let base = match ctx.target.and_then(|t| t.metric) {
                Some(m) => m * rng.random_range(0.95..1.03),
                None => rng.random_range(0.12..0.2),
            };
            Some(base)
        };
        let (exec_output, analysis_report) = match (&failure, metric) {
            (Some(err), _) => (err.clone(), "The script crashed before producing a score.".to_string()),
            (None, Some(m)) => (
                format!("Validation RMSE: {m:.4}\nExecution time: {exec_time:.1} seconds"),
                format!("The model reached a validation RMSE of {m:.4}."),
            ),
            (None, None) => unreachable!(),
        };
        self.programs.push(program);
        Ok(Generated {
            plan,
            code,
            exec_output,
            metric,
            exec_time,
            analysis_report,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForceStatus {
    Buggy,
    Functional,
}

/// Wraps a generator and forces every output to one status.
#[derive(Debug, Clone)]
pub struct StatusOverride<G> {
    pub inner: G,
    pub force: ForceStatus,
}

impl<G> StatusOverride<G> {
    pub fn new(inner: G, force: ForceStatus) -> Self {
        StatusOverride { inner, force }
    }
}

impl<G: CodeGenerator> CodeGenerator for StatusOverride<G> {
    fn generate(&mut self, ctx: &GenContext<'_>, rng: &mut SimRng) -> Result<Generated, String> {
        let mut g = self.inner.generate(ctx, rng)?;
        match self.force {
            ForceStatus::Buggy if g.metric.is_some() => {
                g.metric = None;
                g.exec_output = "Traceback (most recent call last):\nRuntimeError: forced failure".into();
            }
            ForceStatus::Functional if g.metric.is_none() => {
                g.metric = Some(1.0);
                g.exec_output = "Validation RMSE: 1.0000".into();
            }
            _ => {}
        }
        Ok(g)
    }
}

fn entry(plan: &str, code: &str, exec_output: &str, metric: Option<f64>, exec_time: f64) -> FixtureEntry {
    FixtureEntry {
        plan: plan.into(),
        code: code.into(),
        exec_output: exec_output.into(),
        metric,
        exec_time,
    }
}

const XGB_DRAFT: &str = "import pandas as pd
import numpy as np
from xgboost import XGBRegressor
from sklearn.model_selection import train_test_split
from sklearn.metrics import mean_squared_error

train = pd.read_csv('./input/train.csv')
X = train.drop(['SalePrice'], axis=1).select_dtypes(include=[np.number]).fillna(0)
y = np.log1p(train['SalePrice'])
X_train, X_val, y_train, y_val = train_test_split(X, y, test_size=0.2, random_state=42)
model = XGBRegressor(n_estimators=500, learning_rate=0.05)
model.fit(X_train, y_train)
rmse = np.sqrt(mean_squared_error(y_val, model.predict(X_val)))
print(f'Validation RMSE: {rmse:.4f}')
";

const GBR_FIX: &str = "import pandas as pd
import numpy as np
from sklearn.ensemble import GradientBoostingRegressor
from sklearn.model_selection import train_test_split
from sklearn.metrics import mean_squared_error

train = pd.read_csv('./input/train.csv')
X = train.drop(['SalePrice'], axis=1).select_dtypes(include=[np.number]).fillna(0)
y = np.log1p(train['SalePrice'])
X_train, X_val, y_train, y_val = train_test_split(X, y, test_size=0.2, random_state=42)
model = GradientBoostingRegressor(n_estimators=500, learning_rate=0.05)
model.fit(X_train, y_train)
rmse = np.sqrt(mean_squared_error(y_val, model.predict(X_val)))
print(f'Validation RMSE: {rmse:.4f}')
";

const LGBM_DRAFT: &str = "import pandas as pd
import numpy as np
import lightgbm as lgb
from sklearn.model_selection import KFold

train = pd.read_csv('./input/train.csv')
X = train.select_dtypes(include=[np.number]).drop(columns=['SalePrice'])
y = np.log1p(train['SalePrice'])
model = lgb.LGBMRegressor(num_leaves=31)
model.fit(X, y)
";

const RF_DRAFT: &str = "import pandas as pd
import numpy as np
from sklearn.ensemble import RandomForestRegressor
from sklearn.model_selection import cross_val_score

train = pd.read_csv('./input/train.csv')
X = train.select_dtypes(include=[np.number]).drop(columns=['SalePrice']).fillna(0)
y = np.log1p(train['SalePrice'])
model = RandomForestRegressor(n_estimators=200, random_state=0)
scores = cross_val_score(model, X, y, scoring='neg_root_mean_squared_error', cv=5)
print(f'CV RMSE: {-scores.mean():.4f}')
";

const RF_TUNED: &str = "import pandas as pd
import numpy as np
from sklearn.ensemble import RandomForestRegressor
from sklearn.model_selection import cross_val_score

train = pd.read_csv('./input/train.csv')
train['TotalSF'] = train['TotalBsmtSF'] + train['1stFlrSF'] + train['2ndFlrSF']
X = train.select_dtypes(include=[np.number]).drop(columns=['SalePrice']).fillna(0)
y = np.log1p(train['SalePrice'])
model = RandomForestRegressor(n_estimators=500, max_depth=None, random_state=0)
scores = cross_val_score(model, X, y, scoring='neg_root_mean_squared_error', cv=5)
print(f'CV RMSE: {-scores.mean():.4f}')
";

const RIDGE_DRAFT: &str = "import pandas as pd
import numpy as np
from sklearn.linear_model import Ridge

train = pd.read_csv('./input/train.csv')
X = pd.get_dummies(train.drop(columns=['SalePrice'])).fillna(0)
y = np.log1p(train['Saleprice'])
model = Ridge(alpha=1.0)
model.fit(X, y)
";

impl Default for FixtureGenerator {
    /// A small house-price table: drafts that fail on unavailable packages
    /// or a column typo, fixes that swap in installed regressors, and a few
    /// improvements.
    fn default() -> Self {
        let missing = |pkg: &str, line: usize| {
            format!(
                "Traceback (most recent call last):\n  File \"/workspace/runfile.py\", line {line}, in <module>\nModuleNotFoundError: No module named '{pkg}'"
            )
        };
        FixtureGenerator {
            drafts: vec![
                entry("Gradient boosting with xgboost.", XGB_DRAFT, &missing("xgboost", 3), None, 0.8),
                entry("LightGBM baseline.", LGBM_DRAFT, &missing("lightgbm", 3), None, 0.7),
                entry("Random forest baseline.", RF_DRAFT, "CV RMSE: 0.1452", Some(0.1452), 24.0),
                entry(
                    "Ridge regression on one-hot features.",
                    RIDGE_DRAFT,
                    "Traceback (most recent call last):\n  File \"/workspace/runfile.py\", line 7, in <module>\nKeyError: 'Saleprice'",
                    None,
                    1.2,
                ),
            ],
            fixes: vec![
                entry(
                    "Replace XGBRegressor, which is unavailable, with GradientBoostingRegressor.",
                    GBR_FIX,
                    "Validation RMSE: 0.1338",
                    Some(0.1338),
                    31.0,
                ),
                entry(
                    "Switch to RandomForestRegressor since lightgbm is not installed.",
                    RF_DRAFT,
                    "CV RMSE: 0.1452",
                    Some(0.1452),
                    24.0,
                ),
                entry("Retry with xgboost.", XGB_DRAFT, &missing("xgboost", 3), None, 0.8),
            ],
            improvements: vec![
                entry("Add a total square footage feature.", RF_TUNED, "CV RMSE: 0.1391", Some(0.1391), 52.0),
                entry("Use gradient boosting.", GBR_FIX, "Validation RMSE: 0.1338", Some(0.1338), 31.0),
                entry("Keep the random forest.", RF_DRAFT, "CV RMSE: 0.1452", Some(0.1452), 24.0),
            ],
        }
    }
}
