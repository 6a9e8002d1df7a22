import pandas as pd
from sklearn.ensemble import RandomForestRegressor

train = pd.read_csv('./input/train.csv')
X = train.drop(['SalePrice'], axis=1)
y = train['SalePrice']
model = RandomForestRegressor(n_estimators=100)
model.fit(X, y)
