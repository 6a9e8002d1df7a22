import pandas as pd

def prepare_data(data):
    num_cols = data.select_dtypes(include=['number'])
    result = num_cols.fillna(num_cols.median())
    return result

train = pd.read_csv('./input/train.csv')
X = prepare_data(train)
