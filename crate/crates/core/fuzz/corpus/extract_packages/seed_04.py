import pandas as pd
from sklearn.ensemble import GradientBoostingRegressor
df = pd.read_csv('train.csv')
df = df.fillna(df.median(numeric_only=True))
config = {'learning_rate': 0.05, 'n_estimators': 300, 'subsample': 0.8}
gbr = GradientBoostingRegressor(learning_rate=0.05, n_estimators=300, subsample=0.8, random_state=42)
X = df.drop(columns=['target'])
y = df['target']
gbr.fit(X, y)
importance = gbr.feature_importances_
